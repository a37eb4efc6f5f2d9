#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace turtletalk::cli {

enum ExitCode : int { kOk = 0, kFailed = 1, kUsage = 2 };

/// Runs the command line `args` (without the program name). Interactive
/// modes read from `in`; reports go to `out`, problems to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace turtletalk::cli
