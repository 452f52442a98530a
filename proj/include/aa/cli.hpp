#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one subcommand. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "0.2,0.3" → {0.2, 0.3}; throws std::invalid_argument on malformed input.
std::vector<double> parse_list(const std::string& text);

/// Round-trip representation with 17 significant digits.
std::string format_double(double v);

}  // namespace aa::cli
