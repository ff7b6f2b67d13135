#pragma once

#include <string>
#include <vector>

namespace poprec {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitParameter = 2,
    kExitRecovery = 3,
    kExitIo = 4,
};

/// Entry point of the `poprec` binary. args[0] is the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace poprec
