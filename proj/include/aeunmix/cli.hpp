#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aeunmix::cli {

enum ExitCode : int { kOk = 0, kOther = 1, kUsage = 2, kData = 3, kFormat = 4 };

// Runs one subcommand; `args` excludes the program name. Failures print a
// single JSON line {"error": kind, "message": ...} to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aeunmix::cli
