#pragma once

namespace cog::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitPartialFailure = 1,
  kExitInputError = 2,
};

/// Parses argv and runs one subcommand. Never throws; returns an ExitCode.
int run(int argc, const char* const* argv);

}  // namespace cog::cli
