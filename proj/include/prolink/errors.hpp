#pragma once

#include <stdexcept>
#include <string>

namespace prolink {

// Violated precondition of an API call (bad id, wrong shape, wrong state).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or inconsistent input data (files, vocabularies, tasks).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class VocabularyError : public DataError {
 public:
  using DataError::DataError;
};

class TaskError : public DataError {
 public:
  using DataError::DataError;
};

// Prompt cannot be rendered from the available relation information.
class PromptError : public DataError {
 public:
  using DataError::DataError;
};

// Failure talking to an LLM backend (transport, HTTP status, exhausted retries).
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what, int status = 0)
      : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Non-finite value produced inside a computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prolink
