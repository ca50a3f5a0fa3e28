#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace riccati {

/// Shortest decimal string that round-trips to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("invalid number '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("invalid integer '" + std::string(s) + "'");
  return v;
}

/// Time of grid node k on a grid of spacing delta. When delta prints as a
/// short plain decimal the product k*delta is carried out in decimal, so node
/// times print cleanly (2.85 rather than 2.8500000000000001).
inline double grid_time(long long k, double delta) {
  if (k == 0) return 0.0;
  const double fallback = static_cast<double>(k) * delta;
  if (k < 0 || k > 1000000) return fallback;

  const std::string d = format_double(delta);
  if (d.find_first_of("eE-") != std::string::npos) return fallback;
  std::string digits = d;
  std::size_t frac = 0;
  const std::size_t dot = d.find('.');
  if (dot != std::string::npos) {
    digits.erase(dot, 1);
    frac = d.size() - dot - 1;
  }
  if (digits.empty() || digits.size() > 12) return fallback;

  long long mant = 0;
  auto res = std::from_chars(digits.data(), digits.data() + digits.size(), mant);
  if (res.ec != std::errc() || res.ptr != digits.data() + digits.size())
    return fallback;

  std::string p = std::to_string(k * mant);
  if (frac > 0) {
    if (p.size() <= frac) p.insert(0, frac + 1 - p.size(), '0');
    p.insert(p.size() - frac, 1, '.');
    while (p.back() == '0') p.pop_back();
    if (p.back() == '.') p.pop_back();
  }
  return parse_double(p);
}

/// Node times k*delta for k = 1..k_max.
inline std::vector<double> grid_times(double delta, long long k_max) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max > 0 ? k_max : 0));
  for (long long k = 1; k <= k_max; ++k) out.push_back(grid_time(k, delta));
  return out;
}

/// Whitespace tokenizer; views point into the caller's string.
inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r'))
      ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r')
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace riccati
