#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coqg::metrics {

using Sentence = std::vector<std::string>;

namespace detail {

inline std::map<std::vector<std::string>, int> ngram_counts(const Sentence& s, std::size_t n) {
  std::map<std::vector<std::string>, int> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Sentence(s.begin() + static_cast<std::ptrdiff_t>(i),
                                                                 s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

}  // namespace detail

struct BleuResult {
  double score = 0.0;
  std::vector<double> precisions;
  double brevity_penalty = 1.0;
  bool zero_match = false;  // some order had no matching n-gram
};

/// Corpus BLEU up to order `max_n`: clipped n-gram counts are summed over
/// the corpus before the precisions are formed; uniform weights, no
/// smoothing, one reference per candidate.
inline BleuResult corpus_bleu(std::span<const Sentence> candidates, std::span<const Sentence> references, int max_n) {
  if (candidates.empty()) throw std::invalid_argument("bleu: empty candidate set");
  if (candidates.size() != references.size()) throw std::invalid_argument("bleu: candidate/reference count mismatch");
  if (max_n < 1) throw std::invalid_argument("bleu: order must be >= 1");
  std::vector<double> matched(static_cast<std::size_t>(max_n), 0.0), total(static_cast<std::size_t>(max_n), 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto c = detail::ngram_counts(candidates[i], static_cast<std::size_t>(n));
      const auto r = detail::ngram_counts(references[i], static_cast<std::size_t>(n));
      for (const auto& [g, cnt] : c) {
        auto it = r.find(g);
        matched[static_cast<std::size_t>(n - 1)] += std::min(cnt, it == r.end() ? 0 : it->second);
        total[static_cast<std::size_t>(n - 1)] += cnt;
      }
    }
  }
  BleuResult out;
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    const double p = total[static_cast<std::size_t>(n)] > 0 ? matched[static_cast<std::size_t>(n)] / total[static_cast<std::size_t>(n)] : 0.0;
    out.precisions.push_back(p);
    if (p <= 0.0) out.zero_match = true;
    else log_sum += std::log(p);
  }
  if (cand_len <= 0.0) {
    out.brevity_penalty = 0.0;
  } else {
    out.brevity_penalty = cand_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  }
  out.score = out.zero_match ? 0.0 : out.brevity_penalty * std::exp(log_sum / max_n);
  return out;
}

inline double bleu_n(std::span<const Sentence> candidates, std::span<const Sentence> references, int n) {
  return corpus_bleu(candidates, references, n).score;
}

inline std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// LCS F-measure F = (1 + beta^2) P R / (R + beta^2 P). beta = 1.2 as in the
/// common ROUGE-L implementation used for question generation.
inline double rouge_l(const Sentence& candidate, const Sentence& reference, double beta = 1.2) {
  if (reference.empty()) throw std::invalid_argument("rouge_l: empty reference");
  if (candidate.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

inline double corpus_rouge_l(std::span<const Sentence> candidates, std::span<const Sentence> references) {
  if (candidates.size() != references.size()) throw std::invalid_argument("rouge_l: count mismatch");
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge_l(candidates[i], references[i]);
  return sum / static_cast<double>(candidates.size());
}

}  // namespace coqg::metrics
