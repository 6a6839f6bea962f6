#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dfemd::cli {

// Exit codes: 0 success, 1 usage, 2 data validation, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Entry point of the `dfemd` tool. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dfemd::cli
