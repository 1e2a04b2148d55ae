#pragma once

// Command-line driver. Exit codes: 0 success / equal / all pass, 1 nonzero
// difference or failed property, 2 usage or parse error, 3 internal error.

#include <iosfwd>
#include <string>
#include <vector>

namespace emt::cli {

inline constexpr int kOk = 0;
inline constexpr int kDifferent = 1;
inline constexpr int kUsage = 2;
inline constexpr int kInternal = 3;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emt::cli
