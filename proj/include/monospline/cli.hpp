#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace monospline {

enum ExitCode { exit_ok = 0, exit_input_error = 1, exit_not_converged = 2 };

// Entry point of the `monospline` tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace monospline
