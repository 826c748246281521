#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sindykit {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitNumerical = 4 };

/// Parses `args` (without the program name) and runs one subcommand:
/// fit, sweep, simulate, excite, validate, reference.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sindykit
