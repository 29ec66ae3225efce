#pragma once

// Command-line front end: simulate, analyze, scanfit, classify and
// scenario. Exit codes: 0 success, 2 input or config error, 3 analysis
// failure.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "librotor/io.hpp"

namespace librotor {

inline constexpr std::string_view kToolVersion = LIBROTOR_VERSION;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitAnalysis = 3;

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Copy of a run or result record without its wall-clock fields, for
/// byte-level reproducibility checks.
io::json without_timestamps(io::json record);

}  // namespace librotor
