#ifndef STREAMFORGE_TOOLS_CLI_HPP
#define STREAMFORGE_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace streamforge::cli {

/// Process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 2,
  exit_io = 3,
  exit_numerical = 4,
};

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace streamforge::cli

#endif // STREAMFORGE_TOOLS_CLI_HPP
