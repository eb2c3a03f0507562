#pragma once

#include <ostream>

namespace icc {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitDomain = 3,
  kExitSolver = 4,
  kExitAuditFailed = 5,  ///< audit ran and found a saddle, minimum, tree violation or inverted triangle
};

/// Entry point of the `icc` tool: build, trace, coords, deform, audit, viz and serve subcommands.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace icc
