#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace kgap {

using Tokens = std::vector<std::string>;

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Lowercased, trimmed form used for every keyword comparison.
inline std::string normalize_keyword(std::string_view s) { return to_lower(trim(s)); }

inline bool is_detached_punct(std::string_view tok) {
  return tok == "?" || tok == "." || tok == ",";
}

// Plain whitespace split.
inline Tokens split_words(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// Question tokenization: whitespace split with trailing '?', '.' and ','
// detached into tokens of their own. Case is preserved.
inline Tokens tokenize(std::string_view text) {
  Tokens out;
  for (auto& word : split_words(text)) {
    std::size_t end = word.size();
    while (end > 0 && is_detached_punct(std::string_view(word).substr(end - 1, 1))) --end;
    if (end > 0) out.push_back(word.substr(0, end));
    for (std::size_t k = end; k < word.size(); ++k) out.emplace_back(1, word[k]);
  }
  return out;
}

// Inverse of tokenize for well-formed token lists: single spaces, with
// '?', '.' and ',' attached to the preceding token.
inline std::string detokenize(const Tokens& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty() && !is_detached_punct(tok)) out += ' ';
    out += tok;
  }
  return out;
}

inline std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace kgap
