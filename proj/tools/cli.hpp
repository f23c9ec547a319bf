#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hsx::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kNumericFailure = 3,
  kIoError = 4,
};

// Environment variable read for the log level (trace, debug, info, warn, error, off).
inline constexpr const char* kLogLevelEnv = "HSX_LOG_LEVEL";

// Parses argv-style arguments and runs one subcommand. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsx::cli
