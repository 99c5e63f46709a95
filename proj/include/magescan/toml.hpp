#pragma once

// Minimal TOML subset, enough for the run configuration:
//   - [table] and [dotted.table] headers, dotted keys
//   - strings with \" \\ \n \t \r escapes, booleans, integers, floats
//   - single-line homogeneous arrays of the scalar types
//   - '#' comments and blank lines
// Dates, multi-line strings / arrays, inline tables, and arrays of tables
// are out of scope and rejected with a line-numbered error.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "magescan/errors.hpp"

namespace magescan::toml {

class Value;
using Array = std::vector<Value>;

class Value {
 public:
  using Storage = std::variant<std::string, std::int64_t, double, bool, Array>;

  Value() : storage_(std::int64_t{0}) {}
  explicit Value(Storage s) : storage_(std::move(s)) {}

  bool is_string() const { return std::holds_alternative<std::string>(storage_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(storage_); }
  bool is_float() const { return std::holds_alternative<double>(storage_); }
  bool is_bool() const { return std::holds_alternative<bool>(storage_); }
  bool is_array() const { return std::holds_alternative<Array>(storage_); }

  const std::string& as_string() const { return std::get<std::string>(storage_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(storage_); }
  double as_float() const {
    if (is_int()) return static_cast<double>(as_int());
    return std::get<double>(storage_);
  }
  bool as_bool() const { return std::get<bool>(storage_); }
  const Array& as_array() const { return std::get<Array>(storage_); }

 private:
  Storage storage_;
};

// Keys are full dotted paths ("train.folds").
using Table = std::map<std::string, Value>;

Table parse(const std::string& text);
Table parse_file(const std::filesystem::path& path);

// Typed lookups; the *_or variants fall back when the key is absent but
// still reject values of the wrong type.
bool contains(const Table& table, const std::string& key);
std::string get_string(const Table& table, const std::string& key);
std::string get_string_or(const Table& table, const std::string& key,
                          const std::string& fallback);
std::int64_t get_int(const Table& table, const std::string& key);
std::int64_t get_int_or(const Table& table, const std::string& key,
                        std::int64_t fallback);
double get_float(const Table& table, const std::string& key);
double get_float_or(const Table& table, const std::string& key,
                    double fallback);
bool get_bool_or(const Table& table, const std::string& key, bool fallback);
std::vector<std::string> get_string_array_or(
    const Table& table, const std::string& key,
    const std::vector<std::string>& fallback);
std::vector<std::int64_t> get_int_array_or(
    const Table& table, const std::string& key,
    const std::vector<std::int64_t>& fallback);

}  // namespace magescan::toml
