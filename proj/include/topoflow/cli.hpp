#pragma once

#include <iosfwd>

namespace topoflow {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,     // bad flags, config, input files or dimensions
  kExitBudget = 2,    // simplex budget exceeded
  kExitNumeric = 3,   // singular kernel system or degenerate critical edge
};

/// Entry point of the `topoflow` tool; `out` receives results written to
/// standard output, `err` diagnostics.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace topoflow
