#pragma once

#include <string>
#include <vector>

namespace diffpass::cli {

/// Exit codes of the command line tool.
enum ExitCode : int { kPass = 0, kFailed = 1, kUsage = 2 };

/// Runs one command. argv[0] is the program name.
int run(int argc, const char* const* argv);

/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args);

}  // namespace diffpass::cli
