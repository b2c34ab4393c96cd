#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace plroute {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;  // bad input, parse or state errors
inline constexpr int kExitNumeric = 2;     // numeric and sampler failures

/// Runs one command. `args` excludes the program name. Results go to `out`
/// as JSON, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace plroute
