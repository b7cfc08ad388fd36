#pragma once

// Flat "key = value" text used for config files and the config block of the
// weights file. '#' starts a comment; blank lines are ignored.

#include <charconv>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "priorvqa/error.hpp"

namespace priorvqa {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& origin) {
    KeyValues kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      }
      const std::string key = trim(std::string_view(t).substr(0, eq));
      if (key.empty()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      }
      kv.values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
  }
  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string text(const std::string& key) const {
    used_.insert(key);
    return values_.at(key);
  }

  void read(const std::string& key, std::string& out) const {
    if (has(key)) out = text(key);
  }
  void read(const std::string& key, double& out) const {
    if (has(key)) out = to_double(key, text(key));
  }
  template <std::unsigned_integral U>
  void read(const std::string& key, U& out) const {
    if (has(key)) out = static_cast<U>(to_unsigned(key, text(key)));
  }
  void read(const std::string& key, std::vector<std::size_t>& out) const {
    if (!has(key)) return;
    out.clear();
    for (const auto& item : split(text(key), ',')) {
      out.push_back(to_unsigned(key, item));
    }
  }
  void read(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    out.clear();
    for (const auto& item : split(text(key), ',')) {
      out.push_back(to_double(key, item));
    }
  }

  // Throws for any key never read; call after all owners have consumed theirs.
  void reject_unknown(const std::string& origin) const {
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) throw ConfigError(origin + ": unknown key '" + k + "'");
    }
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

 private:
  static double to_double(const std::string& key, const std::string& s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    }
    return v;
  }
  static std::uint64_t to_unsigned(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("key '" + key + "': '" + s +
                        "' is not a non-negative integer");
    }
    return v;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace priorvqa
