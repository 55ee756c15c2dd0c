#pragma once

// Line-based `key = value` files with `#` comments, shared by params and run configs.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fgpose/csv.hpp"
#include "fgpose/errors.hpp"

namespace fgpose {

class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(std::istream& in) {
    KeyValueFile kv;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string text = trim(raw);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty()) throw ParseError("empty key", line);
      if (value.empty()) throw ParseError("empty value for '" + key + "'", line);
      if (!kv.entries_.emplace(key, Entry{value, line}).second) throw ParseError("duplicate key '" + key + "'", line);
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
      return parse(in);
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what());
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const Entry& entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError("missing key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key) const { return entry(key).value; }

  double get_double(const std::string& key) const {
    const Entry& e = entry(key);
    return parse_double(e.value, e.line);
  }

  double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  std::uint64_t get_uint(const std::string& key) const {
    const Entry& e = entry(key);
    std::uint64_t v = 0;
    const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc{} || res.ptr != e.value.data() + e.value.size())
      throw ParseError("'" + key + "' is not a non-negative integer", e.line);
    return v;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_uint(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Entry& e = entry(key);
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ParseError("'" + key + "' must be true or false", e.line);
  }

  /// Comma- or whitespace-separated reals.
  std::vector<double> get_list(const std::string& key) const {
    const Entry& e = entry(key);
    std::string s = e.value;
    for (char& c : s)
      if (c == ',') c = ' ';
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_double(tok, e.line));
    return out;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : entries_) out.push_back(k);
    return out;
  }

  /// Throws on the first key no getter has touched.
  void reject_unused() const {
    for (const auto& [k, e] : entries_)
      if (!used_.count(k)) throw ParseError("unknown key '" + k + "'", e.line);
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace fgpose
