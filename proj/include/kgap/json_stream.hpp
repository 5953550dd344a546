#pragma once

#include <cctype>
#include <cstddef>
#include <istream>
#include <optional>
#include <streambuf>
#include <string>

#include <json.hpp>

#include "kgap/error.hpp"

namespace kgap {

// Incremental reader for a document of the form {"key": value, ...}.
// Each call to next() buffers exactly one member value, so memory use is
// bounded by the largest record rather than the whole file. Any syntax error
// is fatal and reported as a ParseError carrying the absolute byte offset.
class ObjectStreamReader {
 public:
  struct Member {
    std::string key;
    nlohmann::json value;
    std::size_t offset = 0;  // byte offset where the value starts
  };

  explicit ObjectStreamReader(std::istream& in) : buf_(in.rdbuf()) {}

  std::optional<Member> next() {
    if (done_) return std::nullopt;
    if (!started_) {
      skip_ws();
      expect('{');
      started_ = true;
      skip_ws();
      if (peek() == '}') {
        get();
        finish();
        return std::nullopt;
      }
    } else {
      skip_ws();
      int c = get();
      if (c == '}') {
        finish();
        return std::nullopt;
      }
      if (c != ',') fail("expected ',' or '}' between members", offset_ - 1);
      skip_ws();
    }

    Member m;
    std::size_t key_offset = offset_;
    if (peek() != '"') fail("expected a string key", offset_);
    std::string raw_key = read_string_literal();
    try {
      m.key = nlohmann::json::parse(raw_key).get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("invalid key: ") + e.what(), key_offset);
    }
    skip_ws();
    expect(':');
    skip_ws();
    m.offset = offset_;
    std::string raw = read_value();
    try {
      m.value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      std::size_t rel = e.byte > 0 ? e.byte - 1 : 0;
      fail(std::string("malformed value for key '") + m.key + "'", m.offset + rel);
    }
    return m;
  }

  std::size_t offset() const { return offset_; }

 private:
  static constexpr int kEof = std::char_traits<char>::eof();

  int peek() { return buf_ ? buf_->sgetc() : kEof; }

  int get() {
    int c = buf_ ? buf_->sbumpc() : kEof;
    if (c != kEof) ++offset_;
    return c;
  }

  void skip_ws() {
    while (true) {
      int c = peek();
      if (c == kEof || !std::isspace(c)) return;
      get();
    }
  }

  void expect(char want) {
    std::size_t at = offset_;
    int c = get();
    if (c == kEof) fail("unexpected end of input", at);
    if (c != want) fail(std::string("expected '") + want + "'", at);
  }

  [[noreturn]] void fail(const std::string& what, std::size_t at) {
    done_ = true;
    throw ParseError(what, at);
  }

  void finish() {
    done_ = true;
    skip_ws();
    if (peek() != kEof) throw ParseError("trailing data after top-level object", offset_);
  }

  std::string read_string_literal() {
    std::string out;
    out += static_cast<char>(get());  // opening quote
    while (true) {
      int c = get();
      if (c == kEof) fail("unterminated string", offset_);
      out += static_cast<char>(c);
      if (c == '\\') {
        int e = get();
        if (e == kEof) fail("unterminated string", offset_);
        out += static_cast<char>(e);
      } else if (c == '"') {
        return out;
      }
    }
  }

  // Captures the raw text of one JSON value, stopping before the ',' or '}'
  // that terminates it at nesting depth zero.
  std::string read_value() {
    std::string out;
    int depth = 0;
    while (true) {
      int c = peek();
      if (c == kEof) fail("unexpected end of input", offset_);
      if (c == '"') {
        out += read_string_literal();
        continue;
      }
      if (depth == 0 && (c == ',' || c == '}')) break;
      if (c == '{' || c == '[') ++depth;
      if (c == '}' || c == ']') {
        if (depth == 0) fail("unbalanced bracket", offset_);
        --depth;
      }
      out += static_cast<char>(get());
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
  }

  std::streambuf* buf_;
  std::size_t offset_ = 0;
  bool started_ = false;
  bool done_ = false;
};

}  // namespace kgap
