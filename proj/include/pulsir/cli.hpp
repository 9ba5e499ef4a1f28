#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pulsir {

inline constexpr std::string_view kToolName = "pulsir";
inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumeric = 3 };

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pulsir
