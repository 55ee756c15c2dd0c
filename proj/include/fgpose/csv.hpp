#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "fgpose/errors.hpp"

namespace fgpose {

/// Shortest text that parses back to the identical double; always '.' radix.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline bool try_parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline double parse_double(std::string_view s, int line = 0) {
  double v;
  if (!try_parse_double(s, v)) throw ParseError("not a number: '" + std::string(s) + "'", line);
  return v;
}

}  // namespace fgpose
