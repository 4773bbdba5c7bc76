#pragma once

#include "coqg/corpus/tokenizer.hpp"
#include "coqg/corpus/types.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace coqg::corpus {

struct SpanMatch {
  TokenSpan span;
  double f1 = 0.0;
  bool weakly_aligned = false;
};

namespace detail {

struct BestSpan {
  TokenSpan span;
  std::int64_t common = 0;
  std::int64_t length = 0;
  bool found = false;
};

// Exhaustive scan of [lo, hi], O(n^2) with an incremental overlap count.
// F1 = 2c / (len + |answer|); comparisons are done on integers so equal F1
// values tie exactly. Ties go to the shorter span, then the earlier start.
inline BestSpan best_span_in(std::span<const int> type_of, std::span<const int> need, std::int64_t answer_len, int lo,
                             int hi) {
  BestSpan best;
  std::vector<int> used(need.size(), 0);
  for (int s = lo; s <= hi; ++s) {
    std::fill(used.begin(), used.end(), 0);
    std::int64_t common = 0;
    for (int e = s; e <= hi; ++e) {
      const int ty = type_of[static_cast<std::size_t>(e)];
      if (ty >= 0 && used[static_cast<std::size_t>(ty)] < need[static_cast<std::size_t>(ty)]) {
        ++used[static_cast<std::size_t>(ty)];
        ++common;
      }
      const std::int64_t len = e - s + 1;
      bool better = false;
      if (!best.found) {
        better = true;
      } else {
        const std::int64_t lhs = common * (best.length + answer_len);
        const std::int64_t rhs = best.common * (len + answer_len);
        better = lhs > rhs || (lhs == rhs && len < best.length);
      }
      if (better) best = BestSpan{TokenSpan{s, e}, common, len, true};
    }
  }
  return best;
}

}  // namespace detail

/// Contiguous passage span with maximal token F1 against the answer tokens.
///
/// With a rationale hint the search first covers the sentences overlapping
/// the hint; the whole passage is searched only when the best F1 there is 0.
/// Punctuation tokens in the answer are ignored. When no span overlaps the
/// answer at all the hint (or the first token) is returned, flagged weak.
inline SpanMatch locate_answer_span(std::span<const std::string> passage_tokens,
                                    std::span<const TokenSpan> sentences, std::span<const std::string> answer_tokens,
                                    std::optional<TokenSpan> rationale_hint) {
  if (passage_tokens.empty()) throw CorpusError("locate_answer_span: empty passage");
  std::unordered_map<std::string, int> type_id;
  std::vector<int> need;
  std::int64_t answer_len = 0;
  for (const auto& tok : answer_tokens) {
    if (tok.size() == 1 && !detail::is_word_byte(static_cast<unsigned char>(tok[0]))) continue;
    auto [it, inserted] = type_id.emplace(tok, static_cast<int>(need.size()));
    if (inserted) need.push_back(0);
    ++need[static_cast<std::size_t>(it->second)];
    ++answer_len;
  }
  const int last = static_cast<int>(passage_tokens.size()) - 1;
  std::vector<int> type_of(passage_tokens.size(), -1);
  for (std::size_t k = 0; k < passage_tokens.size(); ++k)
    if (auto it = type_id.find(passage_tokens[k]); it != type_id.end()) type_of[k] = it->second;

  auto finish = [&](const detail::BestSpan& b) {
    return SpanMatch{b.span, 2.0 * static_cast<double>(b.common) / static_cast<double>(b.length + answer_len), false};
  };
  auto weak = [&] {
    TokenSpan fallback = rationale_hint ? *rationale_hint : TokenSpan{0, 0};
    fallback.first = std::clamp(fallback.first, 0, last);
    fallback.last = std::clamp(fallback.last, fallback.first, last);
    return SpanMatch{fallback, 0.0, true};
  };
  if (answer_len == 0) return weak();

  if (rationale_hint) {
    int lo = std::clamp(rationale_hint->first, 0, last);
    int hi = std::clamp(rationale_hint->last, lo, last);
    for (const auto& s : sentences) {
      if (s.overlaps(TokenSpan{lo, hi})) {
        lo = std::min(lo, s.first);
        hi = std::max(hi, s.last);
      }
    }
    const auto best = detail::best_span_in(type_of, need, answer_len, lo, hi);
    if (best.common > 0) return finish(best);
  }
  const auto best = detail::best_span_in(type_of, need, answer_len, 0, last);
  if (best.common > 0) return finish(best);
  return weak();
}

}  // namespace coqg::corpus
