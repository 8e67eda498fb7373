#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "prolink/prompter.hpp"

namespace prolink {

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  // Raw response text for one instruction. Throws BackendError.
  virtual std::string complete(const std::string& instruction) = 0;
};

// Answers from a fixed relation-name -> types table. Relation keys are read
// from the rel_dict of the instruction; `relation_names[id]` names rel<id>.
class MockBackend : public LlmBackend {
 public:
  MockBackend(std::map<std::string, SideTypes> oracle, std::vector<std::string> relation_names);
  std::string complete(const std::string& instruction) override;

 private:
  std::map<std::string, SideTypes> oracle_;
  std::vector<std::string> relation_names_;
};

struct HttpBackendConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "PROLINK_LLM_KEY";
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  int timeout_seconds = 60;
};

// Chat-completions client: one user message, temperature 0. Transport errors
// are retried with exponential backoff; a non-2xx status fails immediately.
class HttpBackend : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string complete(const std::string& instruction) override;
  std::size_t attempts() const { return attempts_; }

 private:
  HttpBackendConfig config_;
  std::string api_key_;
  std::size_t attempts_ = 0;
  std::mutex mu_;
};

// Persistent prompt-hash -> response cache in front of another backend. The
// file is rewritten after every miss.
class CachedBackend : public LlmBackend {
 public:
  CachedBackend(LlmBackend& inner, std::string path);
  std::string complete(const std::string& instruction) override;
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  void flush() const;

  LlmBackend& inner_;
  std::string path_;
  std::map<std::string, std::string> entries_;
  std::size_t hits_ = 0, misses_ = 0;
  std::mutex mu_;
};

std::string sha256_hex(std::string_view data);

// Responses in request order, at most `concurrency` requests in flight.
std::vector<std::string> complete_all(LlmBackend& backend, const std::vector<std::string>& prompts,
                                      std::size_t concurrency);

}  // namespace prolink
