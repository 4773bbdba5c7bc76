#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coqg::corpus {

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inclusive token range.
struct TokenSpan {
  int first = 0;
  int last = 0;

  int length() const { return last - first + 1; }
  bool contains(int t) const { return t >= first && t <= last; }
  bool overlaps(const TokenSpan& o) const { return first <= o.last && o.first <= last; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Half-open byte range into a passage; begin < 0 means "no rationale".
struct CharSpan {
  long begin = -1;
  long end = -1;

  bool present() const { return begin >= 0 && end > begin; }
};

struct RawTurn {
  std::string question;
  std::string answer;
  CharSpan rationale;
  int turn_id = 0;
};

struct RawConversation {
  std::string id;
  std::string passage;
  std::vector<RawTurn> turns;
};

enum class BioTag : std::uint8_t { B_ANS = 0, I_ANS = 1, O = 2 };
enum class Evidence : std::uint8_t { NONE = 0, CES = 1, HES = 2 };

inline const char* to_string(BioTag t) {
  switch (t) {
    case BioTag::B_ANS: return "B_ANS";
    case BioTag::I_ANS: return "I_ANS";
    case BioTag::O: return "O";
  }
  return "O";
}

inline const char* to_string(Evidence e) {
  switch (e) {
    case Evidence::CES: return "CES";
    case Evidence::HES: return "HES";
    case Evidence::NONE: return "NONE";
  }
  return "NONE";
}

inline BioTag bio_from_string(const std::string& s) {
  if (s == "B_ANS") return BioTag::B_ANS;
  if (s == "I_ANS") return BioTag::I_ANS;
  if (s == "O") return BioTag::O;
  throw CorpusError("unknown BIO tag '" + s + "'");
}

inline Evidence evidence_from_string(const std::string& s) {
  if (s == "CES") return Evidence::CES;
  if (s == "HES") return Evidence::HES;
  if (s == "NONE") return Evidence::NONE;
  throw CorpusError("unknown evidence label '" + s + "'");
}

struct CorefAnnotation {
  std::vector<int> mention_positions;  // into the flattened history
  int pronoun = 0;                     // position in target_question
  double confidence = 1.0;
};

struct ProcessedExample {
  std::string conversation_id;
  std::vector<std::string> passage_tokens;
  std::vector<TokenSpan> sentence_boundaries;
  TokenSpan answer_span;
  std::vector<BioTag> bio_tags;
  std::vector<int> chunk_ids;
  int turn_number = 1;
  std::vector<std::vector<std::string>> history;
  std::vector<std::string> target_question;
  std::vector<Evidence> evidence;  // one label per sentence
  std::optional<CorefAnnotation> coref;
  bool weakly_aligned = false;

  std::size_t history_length() const {
    std::size_t n = 0;
    for (const auto& h : history) n += h.size();
    return n;
  }

  std::vector<std::string> flat_history() const {
    std::vector<std::string> out;
    for (const auto& h : history) out.insert(out.end(), h.begin(), h.end());
    return out;
  }

  /// Evidence label of every passage token (label of its sentence).
  std::vector<Evidence> token_evidence() const {
    std::vector<Evidence> out(passage_tokens.size(), Evidence::NONE);
    for (std::size_t s = 0; s < sentence_boundaries.size() && s < evidence.size(); ++s)
      for (int t = sentence_boundaries[s].first; t <= sentence_boundaries[s].last; ++t) out[static_cast<std::size_t>(t)] = evidence[s];
    return out;
  }
};

inline const std::string kQuestionMarker = "<q>";
inline const std::string kAnswerMarker = "<a>";

}  // namespace coqg::corpus
