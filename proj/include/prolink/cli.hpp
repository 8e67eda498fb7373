#pragma once

#include <string>
#include <vector>

namespace prolink::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kBackend = 4,
  kNumeric = 5,
};

// Entry point of the `prolink` tool. Never throws; failures map to ExitCode.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace prolink::cli
