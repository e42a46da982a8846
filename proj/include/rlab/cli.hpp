#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rlab {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `rlab` tool. `args` excludes the program name.
/// Subcommands: curve, initmargin, gradcheck, gen, train, report.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rlab
