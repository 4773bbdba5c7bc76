#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace coqg::corpus {

enum class Agreement { Masculine, Feminine, Neuter, Plural };

struct PronounEntry {
  std::string_view word;
  Agreement agreement;
};

inline constexpr std::array<PronounEntry, 12> kPronouns{{
    {"he", Agreement::Masculine},
    {"him", Agreement::Masculine},
    {"his", Agreement::Masculine},
    {"she", Agreement::Feminine},
    {"her", Agreement::Feminine},
    {"hers", Agreement::Feminine},
    {"it", Agreement::Neuter},
    {"its", Agreement::Neuter},
    {"they", Agreement::Plural},
    {"them", Agreement::Plural},
    {"their", Agreement::Plural},
    {"theirs", Agreement::Plural},
}};

inline std::optional<Agreement> pronoun_agreement(std::string_view tok) {
  for (const auto& p : kPronouns)
    if (p.word == tok) return p.agreement;
  return std::nullopt;
}

/// Lowercased pronoun set used by evaluation; loadable from a file with one
/// word per line.
class PronounLexicon {
 public:
  PronounLexicon() {
    for (const auto& p : kPronouns) words_.emplace(p.word);
  }

  static PronounLexicon from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pronoun lexicon " + path);
    PronounLexicon lex;
    lex.words_.clear();
    std::string w;
    while (in >> w) {
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      lex.words_.insert(w);
    }
    return lex;
  }

  bool contains(std::string_view tok) const { return words_.count(std::string(tok)) != 0; }
  const std::set<std::string>& words() const { return words_; }

 private:
  std::set<std::string> words_;
};

}  // namespace coqg::corpus
