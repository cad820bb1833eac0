#include "kzsparse/toml_lite.hpp"

#include <cctype>
#include <stdexcept>
#include <vector>

namespace kzsparse {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  nlohmann::json run() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    while (true) {
      skip_blank_lines();
      if (done()) break;
      if (peek() == '[') {
        ++pos_;
        skip_spaces();
        const auto path = parse_key_path();
        skip_spaces();
        expect(']');
        table = &descend(root, path);
      } else {
        const auto path = parse_key_path();
        skip_spaces();
        expect('=');
        skip_spaces();
        nlohmann::json* target = &descend(*table, {path.begin(), path.end() - 1});
        if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*target)[path.back()] = parse_value();
      }
      end_line();
    }
    return root;
  }

 private:
  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n';
    throw std::runtime_error("toml line " + std::to_string(line) + ": " + msg);
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_spaces() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!done() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!done()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Whitespace, comments and newlines inside arrays.
  void skip_insignificant() {
    while (!done()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
      } else {
        return;
      }
    }
  }

  void end_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (!done() && peek() != '\n') fail("unexpected trailing characters");
    if (!done()) ++pos_;
  }

  std::string parse_key_part() {
    if (peek() == '"') return parse_string();
    std::string key;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
      key += s_[pos_++];
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_key_part()};
    skip_spaces();
    while (peek() == '.') {
      ++pos_;
      skip_spaces();
      path.push_back(parse_key_part());
      skip_spaces();
    }
    return path;
  }

  nlohmann::json& descend(nlohmann::json& from, const std::vector<std::string>& path) {
    nlohmann::json* node = &from;
    for (const auto& part : path) {
      if (!node->contains(part)) (*node)[part] = nlohmann::json::object();
      node = &(*node)[part];
      if (!node->is_object()) fail("'" + part + "' is not a table");
    }
    return *node;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (done() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char esc = s_[pos_++];
      switch (esc) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + esc);
      }
    }
  }

  nlohmann::json parse_value() {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      skip_insignificant();
      while (peek() != ']') {
        arr.push_back(parse_value());
        skip_insignificant();
        if (peek() == ',') {
          ++pos_;
          skip_insignificant();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
      return arr;
    }
    std::string token;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                       peek() == '-' || peek() == '.' || peek() == '_')) {
      token += s_[pos_++];
    }
    if (token == "true") return true;
    if (token == "false") return false;
    if (token.empty()) fail("expected a value");
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" ||
                          digits == "+inf" || digits == "-inf";
    try {
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      } else if (!digits.empty() && digits[0] == '-') {
        const long long v = std::stoll(digits, &used);
        if (used == digits.size()) return v;
      } else {
        const unsigned long long v = std::stoull(digits, &used);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot read value '" + token + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

nlohmann::json parse_toml_lite(const std::string& text) { return Parser(text).run(); }

}  // namespace kzsparse
