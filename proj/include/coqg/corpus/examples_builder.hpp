#pragma once

#include "coqg/corpus/span_locator.hpp"
#include "coqg/corpus/tokenizer.hpp"
#include "coqg/corpus/types.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coqg::corpus {

/// Lowercase, then strip non-alphanumeric characters from both ends.
inline std::string normalize_answer(std::string_view answer) {
  std::size_t b = 0, e = answer.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(answer[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(answer[e - 1]))) --e;
  return Tokenizer::lowercase(answer.substr(b, e - b));
}

inline bool is_uninformative_answer(std::string_view answer) {
  const std::string n = normalize_answer(answer);
  return n == "yes" || n == "no" || n == "unknown";
}

/// Drops turns whose answer is yes / no / unknown. Turn ids are kept.
inline RawConversation filter_turns(const RawConversation& conv) {
  RawConversation out{conv.id, conv.passage, {}};
  for (const auto& t : conv.turns)
    if (!is_uninformative_answer(t.answer)) out.turns.push_back(t);
  return out;
}

/// token t -> floor(t * L / passage_length)
inline std::vector<int> assign_chunks(int passage_length, int chunk_count) {
  if (passage_length < 1 || chunk_count < 1) throw CorpusError("assign_chunks: passage_length and L must be >= 1");
  std::vector<int> ids(static_cast<std::size_t>(passage_length));
  for (int t = 0; t < passage_length; ++t)
    ids[static_cast<std::size_t>(t)] =
        static_cast<int>(static_cast<long long>(t) * chunk_count / passage_length);
  return ids;
}

/// Sentences end after '.', '!' or '?' tokens and at line breaks.
inline std::vector<TokenSpan> split_sentences(std::string_view text, const std::vector<Token>& tokens) {
  std::vector<TokenSpan> out;
  if (tokens.empty()) return out;
  int start = 0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const bool terminal = tokens[k].text == "." || tokens[k].text == "!" || tokens[k].text == "?";
    bool line_break = false;
    if (k + 1 < tokens.size()) {
      const auto gap = text.substr(tokens[k].end, tokens[k + 1].begin - tokens[k].end);
      line_break = gap.find('\n') != std::string_view::npos;
    }
    if (k + 1 == tokens.size() || terminal || line_break) {
      out.push_back(TokenSpan{start, static_cast<int>(k)});
      start = static_cast<int>(k) + 1;
    }
  }
  return out;
}

/// Tokens overlapping the half-open byte range.
inline std::optional<TokenSpan> tokens_in(const std::vector<Token>& tokens, CharSpan range) {
  if (!range.present()) return std::nullopt;
  std::optional<TokenSpan> out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k].end > static_cast<std::size_t>(range.begin) && tokens[k].begin < static_cast<std::size_t>(range.end)) {
      if (!out) out = TokenSpan{static_cast<int>(k), static_cast<int>(k)};
      out->last = static_cast<int>(k);
    }
  }
  return out;
}

/// "<q> q1 .. qm <a> a1 .. am"
inline std::vector<std::string> render_turn(const Tokenizer& tok, const RawTurn& turn) {
  std::vector<std::string> out{kQuestionMarker};
  for (auto& w : tok.words(turn.question)) out.push_back(std::move(w));
  out.push_back(kAnswerMarker);
  for (auto& w : tok.words(turn.answer)) out.push_back(std::move(w));
  return out;
}

struct BuildOptions {
  int history_turns = 3;
  int chunk_count = 10;
};

struct BuildStats {
  std::size_t total_turns = 0;
  std::size_t filtered_turns = 0;
  std::size_t weakly_aligned = 0;
  double span_f1_sum = 0.0;
};

/// Evidence labels per sentence: sentences overlapping the current rationale
/// are CES, sentences overlapping only history rationales are HES.
inline std::vector<Evidence> label_evidence(const std::vector<TokenSpan>& sentences, const TokenSpan& current,
                                            const std::vector<TokenSpan>& historical) {
  std::vector<Evidence> out(sentences.size(), Evidence::NONE);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (sentences[s].overlaps(current)) {
      out[s] = Evidence::CES;
      continue;
    }
    for (const auto& h : historical)
      if (sentences[s].overlaps(h)) out[s] = Evidence::HES;
  }
  return out;
}

/// One example per informative turn. Filtered turns are skipped as targets
/// but still appear in later history windows.
inline std::vector<ProcessedExample> build_examples(const RawConversation& conv, const BuildOptions& opt = {},
                                                    const Tokenizer& tok = Tokenizer{}, BuildStats* stats = nullptr) {
  std::vector<ProcessedExample> out;
  const auto tokens = tok.tokenize(conv.passage);
  if (tokens.empty()) throw CorpusError("conversation " + conv.id + ": empty passage");
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back(t.text);
  const auto sentences = split_sentences(conv.passage, tokens);
  const auto chunks = assign_chunks(static_cast<int>(words.size()), opt.chunk_count);

  std::vector<std::optional<TokenSpan>> rationales;
  for (const auto& t : conv.turns) rationales.push_back(tokens_in(tokens, t.rationale));

  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const RawTurn& turn = conv.turns[i];
    if (stats) ++stats->total_turns;
    if (is_uninformative_answer(turn.answer)) {
      if (stats) ++stats->filtered_turns;
      continue;
    }
    ProcessedExample ex;
    ex.conversation_id = conv.id;
    ex.passage_tokens = words;
    ex.sentence_boundaries = sentences;
    ex.chunk_ids = chunks;
    ex.turn_number = turn.turn_id;

    const auto answer_words = tok.words(turn.answer);
    const SpanMatch match = locate_answer_span(words, sentences, answer_words, rationales[i]);
    ex.answer_span = match.span;
    ex.weakly_aligned = match.weakly_aligned;
    if (stats) {
      stats->span_f1_sum += match.f1;
      if (match.weakly_aligned) ++stats->weakly_aligned;
    }
    ex.bio_tags.assign(words.size(), BioTag::O);
    ex.bio_tags[static_cast<std::size_t>(ex.answer_span.first)] = BioTag::B_ANS;
    for (int t = ex.answer_span.first + 1; t <= ex.answer_span.last; ++t) ex.bio_tags[static_cast<std::size_t>(t)] = BioTag::I_ANS;

    const std::size_t window = std::min<std::size_t>(i, static_cast<std::size_t>(std::max(opt.history_turns, 0)));
    std::vector<TokenSpan> historical;
    for (std::size_t h = i - window; h < i; ++h) {
      ex.history.push_back(render_turn(tok, conv.turns[h]));
      if (rationales[h]) historical.push_back(*rationales[h]);
    }
    ex.evidence = label_evidence(sentences, rationales[i].value_or(ex.answer_span), historical);
    ex.target_question = tok.words(turn.question);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace coqg::corpus
