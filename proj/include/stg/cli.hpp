#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stg {

enum ExitStatus { kExitOk = 0, kExitInfeasible = 1, kExitParse = 2, kExitInternal = 3 };

/// Runs one stgscale command. args excludes the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

int run_cli(int argc, char **argv);

} // namespace stg
