#include "config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace wnlab::cli {

namespace {

std::string anchored(const std::string& source, int line, const std::string& message) {
  return line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

// Cursor over one value; errors carry a plain message, the caller anchors them.
struct Scanner {
  std::string_view s;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool done() {
    skip_space();
    return pos >= s.size();
  }
  char peek() {
    skip_space();
    return pos < s.size() ? s[pos] : '\0';
  }

  std::string string_literal() {
    ++pos;  // opening quote
    std::string out;
    while (pos < s.size() && s[pos] != '"') {
      if (s[pos] == '\\') {
        if (++pos >= s.size()) break;
        switch (s[pos]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: throw std::invalid_argument(std::string("unknown escape \\") + s[pos]);
        }
        ++pos;
      } else {
        out += s[pos++];
      }
    }
    if (pos >= s.size()) throw std::invalid_argument("unterminated string");
    ++pos;
    return out;
  }

  Number number() {
    skip_space();
    const std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '.' || s[pos] == '+' ||
                              s[pos] == '-' || s[pos] == '_'))
      ++pos;
    std::string text(s.substr(start, pos - start));
    std::string digits;
    for (char c : text)
      if (c != '_') digits += c;
    const char* first = digits.data() + (!digits.empty() && digits[0] == '+' ? 1 : 0);
    double v = 0.0;
    auto [end, ec] = std::from_chars(first, digits.data() + digits.size(), v);
    if (digits.empty() || ec != std::errc() || end != digits.data() + digits.size() || !std::isfinite(v))
      throw std::invalid_argument("cannot parse value '" + text + "'");
    return {v, digits};
  }

  ConfigValue value() {
    const char c = peek();
    if (c == '"') return string_literal();
    if (c == '[') {
      ++pos;
      std::vector<Number> nums;
      std::vector<std::string> strs;
      if (peek() == ']') {
        ++pos;
        return nums;
      }
      while (true) {
        if (peek() == '"') {
          if (!nums.empty()) throw std::invalid_argument("mixed types in array");
          strs.push_back(string_literal());
        } else {
          if (!strs.empty()) throw std::invalid_argument("mixed types in array");
          nums.push_back(number());
        }
        const char d = peek();
        ++pos;
        if (d == ']') break;
        if (d != ',') throw std::invalid_argument("expected ',' or ']' in array");
      }
      if (!strs.empty()) return strs;
      return nums;
    }
    if (s.substr(pos, 4) == "true" && (pos + 4 == s.size() || !std::isalnum(static_cast<unsigned char>(s[pos + 4])))) {
      pos += 4;
      return true;
    }
    if (s.substr(pos, 5) == "false" && (pos + 5 == s.size() || !std::isalnum(static_cast<unsigned char>(s[pos + 5])))) {
      pos += 5;
      return false;
    }
    if (c == '\0') throw std::invalid_argument("missing value");
    return number();
  }
};

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

const char* type_name(const ConfigValue& v) {
  switch (v.index()) {
    case 0: return "number";
    case 1: return "string";
    case 2: return "boolean";
    case 3: return "number array";
    default: return "string array";
  }
}

bool parse_integer(const std::string& text, long& out) {
  auto [end, ec] = std::from_chars(text.data() + (text.size() > 1 && text[0] == '+' ? 1 : 0), text.data() + text.size(), out);
  return ec == std::errc() && end == text.data() + text.size();
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line_, const std::string& message)
    : std::runtime_error(anchored(source, line_, message)), line(line_) {}

Config Config::parse(std::string_view text, std::string source) {
  Config cfg;
  cfg.source_ = std::move(source);
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') throw ConfigError(cfg.source_, line_no, "sections are not supported");
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(cfg.source_, line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (!valid_key(key)) throw ConfigError(cfg.source_, line_no, "invalid key '" + key + "'");
    if (cfg.find(key)) throw ConfigError(cfg.source_, line_no, "duplicate key '" + key + "'");
    Scanner sc{trim(line.substr(eq + 1))};
    try {
      Entry e{key, sc.value(), line_no};
      if (!sc.done()) throw std::invalid_argument("unexpected trailing text");
      cfg.entries_.push_back(std::move(e));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(cfg.source_, line_no, "key '" + key + "': " + err.what());
    }
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

const Config::Entry* Config::find(const std::string& key) const {
  for (const Entry& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

const Config::Entry& Config::require(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw ConfigError(source_, 0, "missing required key '" + key + "'");
  e->used = true;
  return *e;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

void Config::fail(const std::string& key, const std::string& message) const {
  const Entry* e = find(key);
  throw ConfigError(source_, e ? e->line : 0, "key '" + key + "': " + message);
}

std::string Config::get_string(const std::string& key) const {
  const Entry& e = require(key);
  if (const auto* s = std::get_if<std::string>(&e.value)) return *s;
  fail(key, std::string("expected a string, got ") + type_name(e.value));
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const Entry& e = require(key);
  if (const auto* n = std::get_if<Number>(&e.value)) return n->value;
  fail(key, std::string("expected a number, got ") + type_name(e.value));
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key) const {
  const Entry& e = require(key);
  if (const auto* n = std::get_if<Number>(&e.value)) {
    long v = 0;
    if (parse_integer(n->text, v)) return v;
    // 1e4 style literals with an exact integer value
    if (n->value == std::floor(n->value) && std::abs(n->value) < 9.0e15) return static_cast<long>(n->value);
    fail(key, "expected an integer, got '" + n->text + "'");
  }
  fail(key, std::string("expected an integer, got ") + type_name(e.value));
}

long Config::get_int(const std::string& key, long fallback) const { return has(key) ? get_int(key) : fallback; }

std::uint64_t Config::get_seed(const std::string& key) const {
  const Entry& e = require(key);
  if (const auto* n = std::get_if<Number>(&e.value)) {
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(n->text.data(), n->text.data() + n->text.size(), v);
    if (ec == std::errc() && end == n->text.data() + n->text.size()) return v;
  }
  fail(key, "expected a non-negative integer seed");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  e->used = true;
  if (const auto* b = std::get_if<bool>(&e->value)) return *b;
  fail(key, std::string("expected true or false, got ") + type_name(e->value));
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  e->used = true;
  if (const auto* a = std::get_if<std::vector<Number>>(&e->value)) {
    std::vector<double> out;
    for (const Number& n : *a) out.push_back(n.value);
    return out;
  }
  if (const auto* n = std::get_if<Number>(&e->value)) return {n->value};
  fail(key, std::string("expected an array of numbers, got ") + type_name(e->value));
}

std::vector<long> Config::get_ints(const std::string& key, const std::vector<long>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  e->used = true;
  std::vector<Number> nums;
  if (const auto* a = std::get_if<std::vector<Number>>(&e->value)) nums = *a;
  else if (const auto* n = std::get_if<Number>(&e->value)) nums = {*n};
  else fail(key, std::string("expected an array of integers, got ") + type_name(e->value));
  std::vector<long> out;
  for (const Number& n : nums) {
    long v = 0;
    if (!parse_integer(n.text, v)) {
      if (!(n.value == std::floor(n.value) && std::abs(n.value) < 9.0e15)) fail(key, "expected integers, got '" + n.text + "'");
      v = static_cast<long>(n.value);
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  e->used = true;
  if (const auto* a = std::get_if<std::vector<std::string>>(&e->value)) return *a;
  if (const auto* s = std::get_if<std::string>(&e->value)) return {*s};
  if (const auto* a = std::get_if<std::vector<Number>>(&e->value); a && a->empty()) return {};
  fail(key, std::string("expected an array of strings, got ") + type_name(e->value));
}

std::vector<TrigPoly> Config::get_trig_polys(const std::string& key, const std::vector<std::string>& fallback) const {
  std::vector<TrigPoly> out;
  for (const std::string& s : get_strings(key, fallback)) {
    try {
      out.push_back(parse_trig_poly(s));
    } catch (const std::invalid_argument& err) {
      fail(key, err.what());
    }
  }
  return out;
}

void Config::reject_unused() const {
  for (const Entry& e : entries_)
    if (!e.used) throw ConfigError(source_, e.line, "unknown key '" + e.key + "' for this experiment");
}

nlohmann::json Config::echo() const {
  nlohmann::json j = nlohmann::json::object();
  for (const Entry& e : entries_) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Number>) {
            long i = 0;
            if (parse_integer(v.text, i)) j[e.key] = i;
            else j[e.key] = v.value;
          } else if constexpr (std::is_same_v<T, std::vector<Number>>) {
            nlohmann::json a = nlohmann::json::array();
            for (const Number& n : v) a.push_back(n.value);
            j[e.key] = a;
          } else {
            j[e.key] = v;
          }
        },
        e.value);
  }
  return j;
}

TrigPoly parse_trig_poly(std::string_view text) {
  Scanner sc{text};
  TrigPoly out = TrigPoly::constant(0.0);
  bool first = true;
  auto integer = [&]() {
    sc.skip_space();
    const std::size_t start = sc.pos;
    if (sc.pos < sc.s.size() && (sc.s[sc.pos] == '-' || sc.s[sc.pos] == '+')) ++sc.pos;
    while (sc.pos < sc.s.size() && std::isdigit(static_cast<unsigned char>(sc.s[sc.pos]))) ++sc.pos;
    std::string t(sc.s.substr(start, sc.pos - start));
    long v = 0;
    if (!parse_integer(t, v) || std::abs(v) > 1000) throw std::invalid_argument("bad mode index '" + t + "'");
    return static_cast<int>(v);
  };
  auto expect = [&](char c) {
    if (sc.peek() != c) throw std::invalid_argument(std::string("expected '") + c + "' in '" + std::string(text) + "'");
    ++sc.pos;
  };
  while (!sc.done()) {
    double sign = 1.0;
    const char c = sc.peek();
    if (c == '+' || c == '-') {
      sign = c == '-' ? -1.0 : 1.0;
      ++sc.pos;
    } else if (!first) {
      throw std::invalid_argument("expected '+' or '-' in '" + std::string(text) + "'");
    }
    first = false;
    double coef = 1.0;
    bool has_coef = false;
    const char d = sc.peek();
    if (std::isdigit(static_cast<unsigned char>(d)) || d == '.') {
      sc.skip_space();
      const std::size_t start = sc.pos;
      while (sc.pos < sc.s.size() && (std::isdigit(static_cast<unsigned char>(sc.s[sc.pos])) || sc.s[sc.pos] == '.' ||
                                      sc.s[sc.pos] == 'e' || sc.s[sc.pos] == 'E' ||
                                      ((sc.s[sc.pos] == '-' || sc.s[sc.pos] == '+') && sc.pos > start &&
                                       (sc.s[sc.pos - 1] == 'e' || sc.s[sc.pos - 1] == 'E'))))
        ++sc.pos;
      const std::string t(sc.s.substr(start, sc.pos - start));
      auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), coef);
      if (ec != std::errc() || end != t.data() + t.size()) throw std::invalid_argument("bad coefficient '" + t + "'");
      has_coef = true;
      if (sc.peek() != '*') {
        out = out + TrigPoly::constant(sign * coef);
        continue;
      }
      ++sc.pos;
    }
    sc.skip_space();
    const std::string_view rest = sc.s.substr(sc.pos);
    bool is_cos = rest.substr(0, 3) == "cos";
    if (!is_cos && rest.substr(0, 3) != "sin")
      throw std::invalid_argument(std::string(has_coef ? "expected cos or sin after '*'" : "expected a term") + " in '" +
                                  std::string(text) + "'");
    sc.pos += 3;
    expect('(');
    const int a = integer();
    expect(',');
    const int b = integer();
    expect(')');
    out = out + (is_cos ? TrigPoly::cosine({a, b}, sign * coef) : TrigPoly::sine({a, b}, sign * coef));
  }
  if (first) throw std::invalid_argument("empty expression");
  return out;
}

}  // namespace wnlab::cli
