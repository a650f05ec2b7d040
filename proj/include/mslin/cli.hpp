#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mslin {

/// Exit statuses of the command line tool.
enum ExitStatus : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_verification_failed = 2,
    exit_certificate_failed = 3,
    exit_numeric = 4,
};

/// Entry point: argv[0] is the program name.  Diagnostics go to `err`, progress to `out`.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace mslin
