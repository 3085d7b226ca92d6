#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace pcf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStageError = 1;
inline constexpr int kExitUsage = 2;

// Parses and runs one `pcfilter` invocation; args[0] is the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace pcf::cli
