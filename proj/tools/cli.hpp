#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace lobfluid::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigError = 2,
  kSolverError = 3,
  kBudgetError = 4,
};

// Parses `args` (without the program name), dispatches the subcommand and
// writes its artifacts into --out-dir. Summaries go to `out`, diagnostics
// to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lobfluid::cli
