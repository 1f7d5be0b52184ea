#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tkrr::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,  // outputs written, but an enabled self-check did not pass
  kUsage = 2,        // bad or missing flags, invalid parameter values
  kNumerical = 3,    // degenerate filter or eigensolver failure
  kIo = 4,           // unreadable input or unwritable output
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tkrr::cli
