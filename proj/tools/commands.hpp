#pragma once

#include <string>
#include <vector>

namespace subsvm::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kSolver = 3,
};

// Parses args (without the program name) and runs the selected subcommand.
int run(const std::vector<std::string>& args);

} // namespace subsvm::cli
