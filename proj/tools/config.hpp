#pragma once

// Flat TOML-subset configuration files:
//
//   # comment
//   key = 123            integer or float
//   key = "text"         string
//   key = true           boolean
//   key = [1, 2.5, 3]    array of numbers
//   key = ["a", "b"]     array of strings
//
// One key per line; no sections, no inline tables, no multi-line values.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wnlab/spectrum.hpp"

namespace wnlab::cli {

/// Diagnostic anchored at "<source>:<line>: message" (line 0 = whole file).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line;
};

struct Number {
  double value = 0.0;
  std::string text;  // literal as written, for exact integer parsing
};

using ConfigValue = std::variant<Number, std::string, bool, std::vector<Number>, std::vector<std::string>>;

class Config {
 public:
  static Config parse(std::string_view text, std::string source = "<config>");
  static Config load(const std::string& path);

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_seed(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<long> get_ints(const std::string& key, const std::vector<long>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;
  /// Array of trigonometric polynomial expressions (see parse_trig_poly).
  std::vector<TrigPoly> get_trig_polys(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Throws ConfigError at the first key that was never read.
  void reject_unused() const;
  /// Every entry in file order.
  nlohmann::json echo() const;

  /// ConfigError anchored at the line of `key` (0 if absent).
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  struct Entry {
    std::string key;
    ConfigValue value;
    int line;
    mutable bool used = false;
  };
  const Entry* find(const std::string& key) const;
  const Entry& require(const std::string& key) const;

  std::string source_;
  std::vector<Entry> entries_;
};

/// Sum of terms [+-][c*]cos(a,b), [+-][c*]sin(a,b) or [+-]c, e.g.
/// "cos(1,0) + 0.5*sin(2,-1) - 0.1". Throws std::invalid_argument.
TrigPoly parse_trig_poly(std::string_view text);

}  // namespace wnlab::cli
