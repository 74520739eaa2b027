#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stigp::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kNumerical = 3;

// Runs the command line `args` (without the program name). Diagnostics go to
// `err`, tables to `out`. Output files are only written on success.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stigp::cli
