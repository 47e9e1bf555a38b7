#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pragsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitComputation = 4;

/// Runs one subcommand. `args` excludes the program name. Reports go to
/// `out`, diagnostics and structured errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pragsim::cli
