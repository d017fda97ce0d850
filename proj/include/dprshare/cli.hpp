#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dprshare {

// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitLoad = 2,         // scenario could not be read or is invalid
    kExitExecution = 3,    // a model, planning or simulation error
    kExitDisagreement = 4, // analytic and simulated verdicts differ
};

// Runs one command line (args excludes the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dprshare
