#pragma once

// A small key/value reader for scan configurations: the flat subset of TOML
// made of [section] headers, `key = value` lines, # comments, and values that
// are strings, numbers, booleans, or single-line arrays of those.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lgp {

using ConfigScalar = std::variant<bool, double, std::string>;

struct ConfigValue {
  std::variant<ConfigScalar, std::vector<ConfigScalar>> data;
  // Raw token of integer literals, so 64-bit seeds survive the round trip.
  std::string raw;

  bool is_array() const { return data.index() == 1; }
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keys inside a section are stored as "section.key".
class ConfigTree {
 public:
  static ConfigTree parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const ConfigValue& at(const std::string& key) const;
  const std::map<std::string, ConfigValue>& values() const { return values_; }

  double number(const std::string& key) const;
  std::string string(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  std::vector<double> number_list(const std::string& key) const;

 private:
  std::map<std::string, ConfigValue> values_;
};

}  // namespace lgp
