#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "singstep/solver.hpp"

namespace singstep::cli {

inline constexpr int kExitRoot = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitSingular = 2;
inline constexpr int kExitOther = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitParse = 65;
inline constexpr int kExitInternal = 70;

int exit_code(solver::Status status);

/// Entry point shared by main() and the tests. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace singstep::cli
