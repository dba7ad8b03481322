#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mpfield::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kArgument = 2,
    kCapacity = 3,
    kNumerical = 4,
};

// Runs the command line `args` (without the program name). Results go to
// `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "0:5:30" (inclusive range) or "0,10,inf". Throws ArgumentError naming the
// 1-based character position of the first bad token.
std::vector<double> parse_snr_grid(const std::string& text);

// "1,2,1,2" -> {1, 2, 1, 2}; same error convention as parse_snr_grid.
std::vector<int> parse_labels(const std::string& text);

// Shortest round-trip decimal form; "inf" / "-inf" / "nan" for specials.
std::string format_double(double value);

}  // namespace mpfield::cli
