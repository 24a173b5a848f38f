#pragma once

#include <iosfwd>

namespace diglab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitUsage = 64;

/// Runs one command line. `serve` blocks until SIGINT or SIGTERM.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diglab::cli
