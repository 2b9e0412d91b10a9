#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace provgraph::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kInputFormat = 2,
  kIO = 3,
  kNumeric = 4,
};

// Runs the command line `args` (args[0] is the program name) with results
// on `out` and diagnostics on `err`. Never throws; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace provgraph::cli
