#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace radf::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitGradcheck = 5;

// Full command-line entry point (train / predict / eval / gradcheck).
// Streams are injected so tests can run commands in process; main() passes
// std::cout / std::cerr. Every failure prints a single
// "error: <category>: ..." line on `err` and returns a nonzero code.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace radf::cli
