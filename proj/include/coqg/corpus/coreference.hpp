#pragma once

#include "coqg/corpus/examples_builder.hpp"
#include "coqg/corpus/pronouns.hpp"
#include "coqg/corpus/tokenizer.hpp"
#include "coqg/corpus/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace coqg::corpus {

struct CorefStats {
  std::size_t annotated = 0;
  std::size_t dropped = 0;  // provider annotations rejected as out of window or malformed
};

/// Source of (mention, pronoun) links for a built example. `conv` is the
/// conversation the example came from, so providers can see original casing.
class CorefProvider {
 public:
  virtual ~CorefProvider() = default;
  virtual std::optional<CorefAnnotation> annotate(const ProcessedExample& ex, const RawConversation& conv,
                                                  CorefStats& stats) const = 0;
};

namespace detail {

inline bool annotation_in_window(const ProcessedExample& ex, const CorefAnnotation& a) {
  const int hist = static_cast<int>(ex.history_length());
  if (a.mention_positions.empty()) return false;
  for (int p : a.mention_positions)
    if (p < 0 || p >= hist) return false;
  if (a.pronoun < 0 || a.pronoun >= static_cast<int>(ex.target_question.size())) return false;
  return pronoun_agreement(ex.target_question[static_cast<std::size_t>(a.pronoun)]).has_value();
}

}  // namespace detail

/// Nearest preceding history mention whose number/gender agrees with the
/// pronoun. Mentions are capitalised token runs (proper names) or nouns from
/// a small gendered lexicon. Confidence is always 1.
class HeuristicCorefProvider : public CorefProvider {
 public:
  explicit HeuristicCorefProvider(Tokenizer tok = {}) : tok_(std::move(tok)) {}

  std::optional<CorefAnnotation> annotate(const ProcessedExample& ex, const RawConversation& conv,
                                          CorefStats& stats) const override {
    if (ex.history.empty()) return std::nullopt;
    const auto surfaces = history_surfaces(ex, conv);
    if (surfaces.size() != ex.history_length()) return std::nullopt;
    const auto mentions = find_mentions(surfaces);
    for (std::size_t p = 0; p < ex.target_question.size(); ++p) {
      const auto agr = pronoun_agreement(ex.target_question[p]);
      if (!agr) continue;
      for (auto it = mentions.rbegin(); it != mentions.rend(); ++it) {
        if (!compatible(*it, *agr)) continue;
        CorefAnnotation a;
        for (int k = it->span.first; k <= it->span.last; ++k) a.mention_positions.push_back(k);
        a.pronoun = static_cast<int>(p);
        a.confidence = 1.0;
        ++stats.annotated;
        return a;
      }
    }
    return std::nullopt;
  }

 private:
  enum class Kind { ProperUnknown, ProperMasculine, ProperFeminine, NounMasculine, NounFeminine, NounNeuter, NounPlural };

  struct Mention {
    TokenSpan span;
    Kind kind;
  };

  static bool compatible(const Mention& m, Agreement a) {
    switch (a) {
      case Agreement::Masculine:
        return m.kind == Kind::ProperUnknown || m.kind == Kind::ProperMasculine || m.kind == Kind::NounMasculine;
      case Agreement::Feminine:
        return m.kind == Kind::ProperUnknown || m.kind == Kind::ProperFeminine || m.kind == Kind::NounFeminine;
      case Agreement::Neuter: return m.kind == Kind::ProperUnknown || m.kind == Kind::NounNeuter;
      case Agreement::Plural: return m.kind == Kind::NounPlural;
    }
    return false;
  }

  std::vector<std::string> history_surfaces(const ProcessedExample& ex, const RawConversation& conv) const {
    std::vector<std::string> out;
    const int first = ex.turn_number - static_cast<int>(ex.history.size());
    for (int id = first; id < ex.turn_number; ++id) {
      if (id < 1 || id > static_cast<int>(conv.turns.size())) return {};
      const RawTurn& t = conv.turns[static_cast<std::size_t>(id - 1)];
      out.push_back(kQuestionMarker);
      for (auto& w : tok_.tokenize(t.question)) out.push_back(std::move(w.surface));
      out.push_back(kAnswerMarker);
      for (auto& w : tok_.tokenize(t.answer)) out.push_back(std::move(w.surface));
    }
    return out;
  }

  static std::vector<Mention> find_mentions(const std::vector<std::string>& surfaces) {
    static const std::set<std::string> function_words{
        "what", "who", "whom", "whose", "where", "when", "why", "how", "which", "the", "a", "an", "in", "on",
        "of", "at", "to", "did", "does", "do", "is", "was", "were", "are", "and", "but", "or", "i", "yes",
        "no", "he", "she", "it", "they", "his", "her", "its", "their", "them", "him", "after", "before",
        "was", "has", "had", "have", "can", "could", "would", "will", "for", "with", "from", "by", "unknown",
        "that", "this", "there", "then", "so", "as", "if", "not", "we", "you", "my", "our", "your", "me"};
    static const std::set<std::string> masculine_nouns{"man", "boy", "father", "king", "brother", "son", "husband",
                                                       "mr", "uncle", "grandfather", "prince", "gentleman", "dad"};
    static const std::set<std::string> feminine_nouns{"woman", "girl", "mother", "queen", "sister", "daughter",
                                                      "wife", "mrs", "ms", "aunt", "grandmother", "princess",
                                                      "lady", "mom"};
    static const std::set<std::string> neuter_nouns{"dog", "cat", "company", "city", "country", "book", "car",
                                                    "house", "ship", "school", "team", "town", "animal", "bird",
                                                    "river", "building", "game", "song", "movie", "film", "horse"};
    static const std::set<std::string> plural_nouns{"people", "men", "women", "children", "kids", "boys", "girls",
                                                     "parents", "students", "friends", "brothers", "sisters",
                                                     "players", "soldiers", "animals", "dogs", "cats", "family"};
    static const std::set<std::string> male_names{"john", "james", "bill", "george", "david", "michael", "robert",
                                                  "tom", "jack", "peter", "paul", "mark", "joe", "bob", "sam",
                                                  "max", "ben", "mike", "henry", "charles", "william"};
    static const std::set<std::string> female_names{"mary", "anna", "sarah", "emma", "lisa", "jane", "susan",
                                                    "kate", "emily", "alice", "linda", "nancy", "sue", "amy",
                                                    "helen", "elizabeth", "julia", "lucy", "karen"};

    auto lower = [](const std::string& s) { return Tokenizer::lowercase(s); };
    auto capitalised = [&](const std::string& s) {
      return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])) != 0 && function_words.count(lower(s)) == 0;
    };
    // Single capitalised words with these endings are usually adjectives
    // (Democratic, American, Chinese, English) rather than names.
    auto adjectival = [&](const std::string& s) {
      const std::string w = lower(s);
      for (std::string_view suf : {"ic", "ian", "an", "ese", "ish"})
        if (w.size() > suf.size() + 2 && w.compare(w.size() - suf.size(), suf.size(), suf) == 0) return true;
      return false;
    };

    std::vector<Mention> out;
    for (std::size_t k = 0; k < surfaces.size();) {
      const std::string& s = surfaces[k];
      if (s == kQuestionMarker || s == kAnswerMarker) {
        ++k;
        continue;
      }
      if (capitalised(s)) {
        std::size_t e = k;
        while (e + 1 < surfaces.size() && capitalised(surfaces[e + 1])) ++e;
        const bool single = e == k;
        if (!(single && adjectival(s))) {
          Kind kind = Kind::ProperUnknown;
          const std::string head = lower(surfaces[k]);
          if (male_names.count(head) || masculine_nouns.count(head)) kind = Kind::ProperMasculine;
          if (female_names.count(head) || feminine_nouns.count(head)) kind = Kind::ProperFeminine;
          out.push_back(Mention{TokenSpan{static_cast<int>(k), static_cast<int>(e)}, kind});
        }
        k = e + 1;
        continue;
      }
      const std::string w = lower(s);
      std::optional<Kind> kind;
      if (masculine_nouns.count(w)) kind = Kind::NounMasculine;
      else if (feminine_nouns.count(w)) kind = Kind::NounFeminine;
      else if (neuter_nouns.count(w)) kind = Kind::NounNeuter;
      else if (plural_nouns.count(w)) kind = Kind::NounPlural;
      if (kind) out.push_back(Mention{TokenSpan{static_cast<int>(k), static_cast<int>(k)}, *kind});
      ++k;
    }
    return out;
  }

  Tokenizer tok_;
};

/// Precomputed annotations from JSONL lines
/// {"conversation_id", "turn_id", "mention_positions", "pronoun", "confidence"}.
/// Confidence is clamped into (0, 1]; non-positive values drop the entry.
class FileCorefProvider : public CorefProvider {
 public:
  static FileCorefProvider from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open coreference annotations " + path);
    FileCorefProvider p;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        CorefAnnotation a;
        a.mention_positions = j.at("mention_positions").get<std::vector<int>>();
        a.pronoun = j.at("pronoun").get<int>();
        a.confidence = j.value("confidence", 1.0);
        p.entries_[{j.at("conversation_id").get<std::string>(), j.at("turn_id").get<int>()}] = std::move(a);
      } catch (const nlohmann::json::exception& e) {
        throw CorpusError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return p;
  }

  void add(const std::string& conversation_id, int turn_id, CorefAnnotation a) {
    entries_[{conversation_id, turn_id}] = std::move(a);
  }

  bool has(const std::string& conversation_id, int turn_id) const {
    return entries_.count({conversation_id, turn_id}) != 0;
  }

  std::optional<CorefAnnotation> annotate(const ProcessedExample& ex, const RawConversation&,
                                          CorefStats& stats) const override {
    auto it = entries_.find({ex.conversation_id, ex.turn_number});
    if (it == entries_.end()) return std::nullopt;
    CorefAnnotation a = it->second;
    if (!(a.confidence > 0.0) || !detail::annotation_in_window(ex, a)) {
      ++stats.dropped;
      return std::nullopt;
    }
    a.confidence = std::min(a.confidence, 1.0);
    ++stats.annotated;
    return a;
  }

 private:
  std::map<std::pair<std::string, int>, CorefAnnotation> entries_;
};

/// External annotations first; the fallback only sees examples the file does
/// not mention.
class LayeredCorefProvider : public CorefProvider {
 public:
  LayeredCorefProvider(std::shared_ptr<const FileCorefProvider> primary, std::shared_ptr<const CorefProvider> fallback)
      : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

  std::optional<CorefAnnotation> annotate(const ProcessedExample& ex, const RawConversation& conv,
                                          CorefStats& stats) const override {
    if (primary_ && primary_->has(ex.conversation_id, ex.turn_number)) return primary_->annotate(ex, conv, stats);
    return fallback_ ? fallback_->annotate(ex, conv, stats) : std::nullopt;
  }

 private:
  std::shared_ptr<const FileCorefProvider> primary_;
  std::shared_ptr<const CorefProvider> fallback_;
};

inline std::optional<CorefAnnotation> annotate_coreference(const ProcessedExample& ex, const RawConversation& conv,
                                                           const CorefProvider& provider, CorefStats& stats) {
  return provider.annotate(ex, conv, stats);
}

}  // namespace coqg::corpus
