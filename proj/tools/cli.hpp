#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pwprox::cli {

/// Runs the command line. Exit codes: 0 success, 1 usage error, 2 runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Help text of the top-level command (empty name) or one subcommand.
std::string help_text(const std::string& subcommand);

}  // namespace pwprox::cli
