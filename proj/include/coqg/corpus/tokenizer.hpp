#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coqg::corpus {

/// A token together with the half-open byte range [begin, end) it occupies
/// in the source text. `text` is lowercased; `surface` keeps the original case.
struct Token {
  std::string text;
  std::string surface;
  std::size_t begin = 0;
  std::size_t end = 0;
};

namespace detail {
inline bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }
}  // namespace detail

/// Whitespace + punctuation splitting. Maximal runs of alphanumeric bytes
/// (non-ASCII bytes count as alphanumeric) form one token, every other
/// non-space byte is a token by itself. Output is lowercased.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<Token> tokenize(std::string_view text) const {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
      const auto c = static_cast<unsigned char>(text[i]);
      if (std::isspace(c) != 0) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      if (detail::is_word_byte(c))
        while (j < text.size() && detail::is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      Token t;
      t.surface = std::string(text.substr(i, j - i));
      t.text = lowercase(t.surface);
      t.begin = i;
      t.end = j;
      out.push_back(std::move(t));
      i = j;
    }
    return out;
  }

  std::vector<std::string> words(std::string_view text) const {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
    return out;
  }

  static std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
  }
};

inline bool is_punctuation_token(std::string_view tok) {
  return tok.size() == 1 && !detail::is_word_byte(static_cast<unsigned char>(tok[0]));
}

}  // namespace coqg::corpus
