#include "lgpolymer/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <sstream>

namespace lgp {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Drops a trailing # comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

ConfigScalar parse_scalar(const std::string& token, int line_no) {
  const auto fail = [&](const std::string& what) {
    throw ConfigError("line " + std::to_string(line_no) + ": " + what + " '" + token + "'");
  };
  if (token.empty()) fail("empty value");
  if (token.front() == '"') {
    if (token.size() < 2 || token.back() != '"') fail("unterminated string");
    return token.substr(1, token.size() - 2);
  }
  if (token == "true") return true;
  if (token == "false") return false;
  std::string digits;
  for (char c : token) {
    if (c != '_') digits += c;
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) fail("bad value");
  return v;
}

std::vector<std::string> split_array(const std::string& body, int line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : body) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ConfigError("line " + std::to_string(line_no) + ": unterminated string in array");
  const std::string last = trim(cur);
  if (!last.empty()) out.push_back(last);
  for (const auto& item : out) {
    if (item.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty array element");
  }
  return out;
}

}  // namespace

ConfigTree ConfigTree::parse(const std::string& text) {
  ConfigTree tree;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (tree.values_.count(full)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + full);

    ConfigValue cv;
    cv.raw = value;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
      std::vector<ConfigScalar> items;
      for (const auto& tok : split_array(value.substr(1, value.size() - 2), line_no)) {
        items.push_back(parse_scalar(tok, line_no));
      }
      cv.data = std::move(items);
    } else {
      cv.data = parse_scalar(value, line_no);
    }
    tree.values_.emplace(full, std::move(cv));
  }
  return tree;
}

const ConfigValue& ConfigTree::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key " + key);
  return it->second;
}

namespace {

template <typename T>
const T& scalar_as(const ConfigValue& v, const std::string& key, const char* type) {
  if (v.is_array()) throw ConfigError("key " + key + ": expected " + type + ", got array");
  const auto& s = std::get<ConfigScalar>(v.data);
  if (!std::holds_alternative<T>(s)) throw ConfigError("key " + key + ": expected " + type);
  return std::get<T>(s);
}

}  // namespace

double ConfigTree::number(const std::string& key) const { return scalar_as<double>(at(key), key, "number"); }

std::string ConfigTree::string(const std::string& key) const {
  return scalar_as<std::string>(at(key), key, "string");
}

bool ConfigTree::boolean(const std::string& key) const { return scalar_as<bool>(at(key), key, "boolean"); }

std::uint64_t ConfigTree::unsigned_integer(const std::string& key) const {
  const ConfigValue& v = at(key);
  scalar_as<double>(v, key, "integer");
  std::string digits;
  for (char c : v.raw) {
    if (c != '_') digits += c;
  }
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw ConfigError("key " + key + ": expected a non-negative integer");
  }
  return out;
}

std::vector<double> ConfigTree::number_list(const std::string& key) const {
  const ConfigValue& v = at(key);
  if (!v.is_array()) return {number(key)};
  std::vector<double> out;
  for (const auto& item : std::get<std::vector<ConfigScalar>>(v.data)) {
    if (!std::holds_alternative<double>(item)) throw ConfigError("key " + key + ": expected numbers");
    out.push_back(std::get<double>(item));
  }
  return out;
}

}  // namespace lgp
