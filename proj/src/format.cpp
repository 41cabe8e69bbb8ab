#include "revpref/format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace revpref {

std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out = buf;
  if (out == "-0" || out.rfind("-0.", 0) == 0) {
    // Avoid "-0.00" for tiny negative values.
    bool all_zero = true;
    for (char c : out.substr(1)) {
      if (c != '0' && c != '.') all_zero = false;
    }
    if (all_zero) out.erase(0, 1);
  }
  return out;
}

std::string format_trimmed(double value, int max_decimals) {
  std::string out = format_fixed(value, max_decimals);
  if (out.find('.') == std::string::npos) return out;
  while (!out.empty() && out.back() == '0') out.pop_back();
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

double round_sig(double value, int digits) {
  if (!std::isfinite(value) || value == 0.0) return value;
  return std::strtod(format_sig(value, digits).c_str(), nullptr);
}

double round_decimals(double value, int decimals) {
  return std::strtod(format_fixed(value, decimals).c_str(), nullptr);
}

std::string format_shortest(double value) {
  // Fixed notation keeps the reply free of exponents the parser would split.
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

}  // namespace revpref
