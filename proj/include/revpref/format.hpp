#pragma once

#include <string>

namespace revpref {

// printf-style "%.<digits>g".
std::string format_sig(double value, int digits);

// Fixed-point with exactly `decimals` decimals ("%.<decimals>f").
std::string format_fixed(double value, int decimals);

// Fixed-point with at most `max_decimals` decimals, trailing zeros trimmed
// ("0.50" -> "0.5", "2.00" -> "2").
std::string format_trimmed(double value, int max_decimals);

// Rounds to the value whose shortest decimal text has `digits` significant
// digits. Idempotent.
double round_sig(double value, int digits);

double round_decimals(double value, int decimals);

// Shortest decimal text that reads back as exactly `value`.
std::string format_shortest(double value);

}  // namespace revpref
