#pragma once

#include <iosfwd>

namespace clgp::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadArguments = 2,
  kDiverged = 3,
  kMisaligned = 4,
  kUnseenRows = 5,
};

/// Entry point of the `clgp` tool. Subcommands: gen, train, impute, eval.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clgp::cli
