#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace marom::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, numerical_failure = 3 };

/// Runs one command line (args excludes the program name). On success a
/// single JSON result line goes to `out`; diagnostics go to `err`.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace marom::cli
