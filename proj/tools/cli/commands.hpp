#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pbitsim::cli {

/// Parses `args` (without the program name), runs the selected subcommand and
/// returns the process exit code: 0 success, 2 configuration error (no files
/// written), 3 runtime or analysis error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbitsim::cli
