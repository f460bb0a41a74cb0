#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace crit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNoConvergence = 3;

/// crit-avalanche <subcommand> --config <path> [--out <dir>]. args excludes the
/// program name. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crit
