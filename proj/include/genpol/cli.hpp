#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace genpol::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,    // anything not covered below
  kConfig = 2,     // bad config, bad flags, missing prerequisite stage output
  kIo = 3,         // unreadable or unwritable files
  kNumeric = 4,    // divergence or non-finite training values
};

// Runs one subcommand. args excludes the program name.
//
//   make-data | pretrain | train-critic | train-gmpo | train-gmpg |
//   sample | logprob | eval | export-trajectories
//
// Common flags: --config FILE, --set section.key=value (repeatable).
// Output goes to output.dir, resolved under $GENPOL_OUTPUT_ROOT when that
// is set and the directory is relative.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genpol::cli
