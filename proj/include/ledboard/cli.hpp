#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace ledboard::cli {

// Stable exit codes.
enum ExitCode : int {
  kOk = 0,
  kConnectionFailure = 1,  // also bind failures for device/serve
  kInvalidArgument = 2,
};

/// Runs one invocation. `args` excludes the program name. Long-running
/// subcommands (device, serve) return once `stop` becomes true.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>& stop);

}  // namespace ledboard::cli
