#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace titan::cli {

/// Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
enum ExitCode { ok = 0, input_error = 2, numerical_error = 3 };

/// Runs `titan <subcommand> ...`. Results go to files named by --out; progress
/// lines go to `log`, timings and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

}  // namespace titan::cli
