#include "magescan/toml.hpp"

#include <cctype>
#include <charconv>

#include "magescan/util.hpp"

namespace magescan::toml {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  std::size_t line;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }
};

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_bare_key(Cursor& c) {
  std::string key;
  while (!c.done() && (is_bare_key_char(c.peek()) || c.peek() == '.')) {
    key += c.peek();
    ++c.pos;
  }
  if (key.empty() || key.front() == '.' || key.back() == '.') {
    fail(c.line, "malformed key");
  }
  return key;
}

std::string parse_quoted_string(Cursor& c) {
  ++c.pos;  // consume the opening quote
  std::string out;
  while (true) {
    if (c.done()) fail(c.line, "unterminated string");
    char ch = c.peek();
    ++c.pos;
    if (ch == '"') return out;
    if (ch == '\\') {
      if (c.done()) fail(c.line, "unterminated escape");
      char esc = c.peek();
      ++c.pos;
      switch (esc) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default:
          fail(c.line, std::string("unsupported escape \\") + esc);
      }
    } else {
      out += ch;
    }
  }
}

Value parse_scalar(Cursor& c);

Value parse_array(Cursor& c) {
  ++c.pos;  // consume '['
  Array items;
  c.skip_ws();
  while (true) {
    if (c.done()) fail(c.line, "unterminated array");
    if (c.peek() == ']') {
      ++c.pos;
      break;
    }
    items.push_back(parse_scalar(c));
    c.skip_ws();
    if (!c.done() && c.peek() == ',') {
      ++c.pos;
      c.skip_ws();
      continue;
    }
    if (!c.done() && c.peek() == ']') {
      ++c.pos;
      break;
    }
    fail(c.line, "expected ',' or ']' in array");
  }
  for (std::size_t i = 1; i < items.size(); ++i) {
    bool same = (items[i].is_string() && items[0].is_string()) ||
                (items[i].is_bool() && items[0].is_bool()) ||
                ((items[i].is_int() || items[i].is_float()) &&
                 (items[0].is_int() || items[0].is_float()));
    if (!same) fail(c.line, "arrays must be homogeneous");
  }
  return Value(std::move(items));
}

Value parse_scalar(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail(c.line, "missing value");
  char ch = c.peek();
  if (ch == '"') return Value(parse_quoted_string(c));
  if (ch == '[') return parse_array(c);
  // bare token: bool or number
  std::string token;
  while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '#' &&
         c.peek() != ' ' && c.peek() != '\t') {
    token += c.peek();
    ++c.pos;
  }
  if (token == "true") return Value(true);
  if (token == "false") return Value(false);
  if (token.empty()) fail(c.line, "missing value");
  bool looks_float = token.find_first_of(".eE") != std::string::npos &&
                     !(token.size() > 1 && token[0] == '0' && token[1] == 'x');
  if (!looks_float) {
    std::int64_t iv = 0;
    auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), iv);
    if (ec == std::errc() && ptr == token.data() + token.size()) {
      return Value(iv);
    }
  }
  double dv = 0.0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), dv);
  if (ec == std::errc() && ptr == token.data() + token.size()) {
    return Value(dv);
  }
  fail(c.line, "cannot parse value \"" + token + "\"");
}

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::string prefix;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    Cursor c{line, 0, line_no};
    c.skip_ws();
    if (c.done() || c.peek() == '#') continue;

    if (c.peek() == '[') {
      ++c.pos;
      if (!c.done() && c.peek() == '[') {
        fail(line_no, "arrays of tables are not supported");
      }
      std::string header = parse_bare_key(c);
      if (c.done() || c.peek() != ']') fail(line_no, "malformed table header");
      ++c.pos;
      c.skip_ws();
      if (!c.done() && c.peek() != '#') fail(line_no, "trailing characters");
      prefix = header + ".";
      continue;
    }

    std::string key = parse_bare_key(c);
    c.skip_ws();
    if (c.done() || c.peek() != '=') fail(line_no, "expected '='");
    ++c.pos;
    Value value = parse_scalar(c);
    c.skip_ws();
    if (!c.done() && c.peek() != '#') fail(line_no, "trailing characters");

    std::string full = prefix + key;
    if (table.count(full)) fail(line_no, "duplicate key \"" + full + "\"");
    table.emplace(std::move(full), std::move(value));

    if (end == text.size()) break;
  }
  return table;
}

Table parse_file(const std::filesystem::path& path) {
  return parse(read_file(path));
}

bool contains(const Table& table, const std::string& key) {
  return table.count(key) > 0;
}

namespace {

const Value& require(const Table& table, const std::string& key) {
  auto it = table.find(key);
  if (it == table.end()) {
    throw ConfigError("missing required config key \"" + key + "\"");
  }
  return it->second;
}

[[noreturn]] void type_error(const std::string& key, const char* expected) {
  throw ConfigError("config key \"" + key + "\" must be " + expected);
}

}  // namespace

std::string get_string(const Table& table, const std::string& key) {
  const Value& v = require(table, key);
  if (!v.is_string()) type_error(key, "a string");
  return v.as_string();
}

std::string get_string_or(const Table& table, const std::string& key,
                          const std::string& fallback) {
  if (!contains(table, key)) return fallback;
  return get_string(table, key);
}

std::int64_t get_int(const Table& table, const std::string& key) {
  const Value& v = require(table, key);
  if (!v.is_int()) type_error(key, "an integer");
  return v.as_int();
}

std::int64_t get_int_or(const Table& table, const std::string& key,
                        std::int64_t fallback) {
  if (!contains(table, key)) return fallback;
  return get_int(table, key);
}

double get_float(const Table& table, const std::string& key) {
  const Value& v = require(table, key);
  if (!v.is_float() && !v.is_int()) type_error(key, "a number");
  return v.as_float();
}

double get_float_or(const Table& table, const std::string& key,
                    double fallback) {
  if (!contains(table, key)) return fallback;
  return get_float(table, key);
}

bool get_bool_or(const Table& table, const std::string& key, bool fallback) {
  if (!contains(table, key)) return fallback;
  const Value& v = require(table, key);
  if (!v.is_bool()) type_error(key, "a boolean");
  return v.as_bool();
}

std::vector<std::string> get_string_array_or(
    const Table& table, const std::string& key,
    const std::vector<std::string>& fallback) {
  if (!contains(table, key)) return fallback;
  const Value& v = require(table, key);
  if (!v.is_array()) type_error(key, "an array of strings");
  std::vector<std::string> out;
  for (const Value& item : v.as_array()) {
    if (!item.is_string()) type_error(key, "an array of strings");
    out.push_back(item.as_string());
  }
  return out;
}

std::vector<std::int64_t> get_int_array_or(
    const Table& table, const std::string& key,
    const std::vector<std::int64_t>& fallback) {
  if (!contains(table, key)) return fallback;
  const Value& v = require(table, key);
  if (!v.is_array()) type_error(key, "an array of integers");
  std::vector<std::int64_t> out;
  for (const Value& item : v.as_array()) {
    if (!item.is_int()) type_error(key, "an array of integers");
    out.push_back(item.as_int());
  }
  return out;
}

}  // namespace magescan::toml
