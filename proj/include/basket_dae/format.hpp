#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace basket_dae {

/// Decimal rendering with `digits` significant digits (17 round-trips any double).
inline std::string to_decimal(double value, int digits = 17) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

/// Shortest decimal string that parses back to exactly `value`.
inline std::string to_shortest(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace basket_dae
