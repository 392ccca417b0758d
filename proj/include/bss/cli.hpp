#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bss {

inline constexpr const char* kToolName = "bssml";
inline constexpr const char* kToolVersion = "0.1.0";

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitInput = 2,           ///< malformed input or configuration
    kExitInsufficient = 3,    ///< not enough data to train or assess
    kExitMismatch = 4,        ///< model and query do not fit together
    kExitMissingReport = 5,
};

/// Runs one command line (without the program name). Output is buffered and
/// written to `out` / `err` only when the command finishes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bss
