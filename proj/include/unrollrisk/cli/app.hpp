#pragma once

#include <iosfwd>

namespace unrollrisk::cli {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitIo = 3 };

// Parses argv and runs one subcommand. Results go to `out` unless --out names a
// file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace unrollrisk::cli
