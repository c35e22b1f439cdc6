#pragma once

#include <string>
#include <vector>

namespace minimt::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kData = 2, kPartial = 3 };

// Runs the minimt command line; `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace minimt::cli
