#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xwalk::cli
{

/// Process exit codes. Stable across releases.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitInputError = 2,
  kExitEstimationError = 3,
};

/// Output root used when --out is omitted: $XWALK_OUT, else "xwalk-out".
std::string default_output_root();

/// Runs `xwalk <command> [options]`. args[0] is the program name.
/// Commands: simulate, analyze, estimate, replay, calibrate, serve.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

int run(int argc, char ** argv);

}  // namespace xwalk::cli
