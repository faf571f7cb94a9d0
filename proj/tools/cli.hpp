#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evalstats::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int { kSuccess = 0, kInternalError = 1, kUsageError = 2, kPreconditionError = 3 };

/// Runs `evalstats <args...>` writing reports to `out` and diagnostics to
/// `err`; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evalstats::cli
