#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace supou::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInfeasible = 2;

// Runs `supou <command> ...`; `args` excludes the program name. Results go to
// `out`, diagnostics and warnings to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace supou::cli
