#pragma once

#include "coqg/corpus/pronouns.hpp"
#include "coqg/corpus/types.hpp"
#include "coqg/metrics/ngram.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace coqg::metrics {

struct PronounScores {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  bool precision_undefined = false;  // no pronouns generated
  bool recall_undefined = false;     // no pronouns in references
};

/// Micro-averaged pronoun P/R/F over per-question multiset intersections.
inline PronounScores pronoun_prf(std::span<const Sentence> candidates, std::span<const Sentence> references,
                                 const corpus::PronounLexicon& lexicon = {}) {
  if (candidates.size() != references.size()) throw std::invalid_argument("pronoun_prf: count mismatch");
  double overlap = 0.0, cand_total = 0.0, ref_total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::map<std::string, int> c, r;
    for (const auto& t : candidates[i])
      if (lexicon.contains(t)) ++c[t];
    for (const auto& t : references[i])
      if (lexicon.contains(t)) ++r[t];
    for (const auto& [w, n] : c) {
      cand_total += n;
      if (auto it = r.find(w); it != r.end()) overlap += std::min(n, it->second);
    }
    for (const auto& [w, n] : r) ref_total += n;
  }
  PronounScores s;
  s.precision_undefined = cand_total == 0.0;
  s.recall_undefined = ref_total == 0.0;
  s.precision = s.precision_undefined ? 0.0 : overlap / cand_total;
  s.recall = s.recall_undefined ? 0.0 : overlap / ref_total;
  s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

/// Indices of examples whose target pronoun is linked into the history.
inline std::vector<std::size_t> coreference_subset(std::span<const corpus::ProcessedExample> examples,
                                                   const corpus::PronounLexicon& lexicon = {}) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (!ex.coref || ex.coref->pronoun < 0 || ex.coref->pronoun >= static_cast<int>(ex.target_question.size())) continue;
    if (lexicon.contains(ex.target_question[static_cast<std::size_t>(ex.coref->pronoun)])) out.push_back(i);
  }
  return out;
}

struct AttentionMass {
  double ces = 0.0;
  double hes = 0.0;
  std::size_t counted = 0;
  std::size_t excluded = 0;  // examples without CES tokens or without a trace
};

/// Per example: passage attention averaged over steps, CES / HES shares of
/// its total; then averaged over examples.
inline AttentionMass attention_mass(std::span<const std::vector<std::vector<double>>> alpha_traces,
                                    std::span<const std::vector<corpus::Evidence>> token_evidence) {
  if (alpha_traces.size() != token_evidence.size()) throw std::invalid_argument("attention_mass: count mismatch");
  AttentionMass out;
  for (std::size_t i = 0; i < alpha_traces.size(); ++i) {
    const auto& steps = alpha_traces[i];
    const auto& ev = token_evidence[i];
    const bool has_ces = std::find(ev.begin(), ev.end(), corpus::Evidence::CES) != ev.end();
    if (steps.empty() || !has_ces) {
      ++out.excluded;
      continue;
    }
    std::vector<double> mean(ev.size(), 0.0);
    for (const auto& a : steps) {
      if (a.size() != ev.size()) throw std::invalid_argument("attention_mass: trace length differs from passage");
      for (std::size_t j = 0; j < a.size(); ++j) mean[j] += a[j] / static_cast<double>(steps.size());
    }
    double total = 0.0, ces = 0.0, hes = 0.0;
    for (std::size_t j = 0; j < mean.size(); ++j) {
      total += mean[j];
      if (ev[j] == corpus::Evidence::CES) ces += mean[j];
      if (ev[j] == corpus::Evidence::HES) hes += mean[j];
    }
    if (!(total > 0.0)) {
      ++out.excluded;
      continue;
    }
    out.ces += ces / total;
    out.hes += hes / total;
    ++out.counted;
  }
  if (out.counted > 0) {
    out.ces /= static_cast<double>(out.counted);
    out.hes /= static_cast<double>(out.counted);
  }
  return out;
}

struct NgramScores {
  double bleu1 = 0.0, bleu2 = 0.0, bleu3 = 0.0, rouge_l = 0.0;
  std::size_t count = 0;
};

inline NgramScores ngram_scores(std::span<const Sentence> candidates, std::span<const Sentence> references) {
  NgramScores s;
  s.count = candidates.size();
  if (candidates.empty()) return s;
  s.bleu1 = bleu_n(candidates, references, 1);
  s.bleu2 = bleu_n(candidates, references, 2);
  s.bleu3 = bleu_n(candidates, references, 3);
  s.rouge_l = corpus_rouge_l(candidates, references);
  return s;
}

struct EvalReport {
  NgramScores all;
  NgramScores coref_subset;
  PronounScores pronouns;  // on the coreference subset
  std::optional<AttentionMass> attention;

  bool any_nan() const {
    std::vector<double> v{all.bleu1, all.bleu2, all.bleu3, all.rouge_l, coref_subset.bleu1, coref_subset.bleu2,
                          coref_subset.bleu3, coref_subset.rouge_l, pronouns.precision, pronouns.recall, pronouns.f};
    if (attention) v.insert(v.end(), {attention->ces, attention->hes});
    for (double x : v)
      if (std::isnan(x)) return true;
    return false;
  }
};

inline nlohmann::json to_json(const EvalReport& r) {
  auto ng = [](const NgramScores& s) {
    return nlohmann::json{{"bleu1", s.bleu1}, {"bleu2", s.bleu2}, {"bleu3", s.bleu3}, {"rouge_l", s.rouge_l}, {"count", s.count}};
  };
  nlohmann::json j{{"all", ng(r.all)},
                   {"coreference_subset", ng(r.coref_subset)},
                   {"pronouns",
                    {{"precision", r.pronouns.precision},
                     {"recall", r.pronouns.recall},
                     {"f", r.pronouns.f},
                     {"precision_undefined", r.pronouns.precision_undefined},
                     {"recall_undefined", r.pronouns.recall_undefined}}}};
  if (r.attention)
    j["attention"] = {{"ces_mass", r.attention->ces},
                      {"hes_mass", r.attention->hes},
                      {"counted", r.attention->counted},
                      {"excluded", r.attention->excluded}};
  return j;
}

/// Scores scaled by 100, as usually reported.
inline std::string format_table(const EvalReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "subset        n      B1      B2      B3     R-L\n";
  auto row = [&](const char* name, const NgramScores& s) {
    out << std::left << std::setw(10) << name << std::right << std::setw(5) << s.count << std::setw(8) << 100 * s.bleu1
        << std::setw(8) << 100 * s.bleu2 << std::setw(8) << 100 * s.bleu3 << std::setw(8) << 100 * s.rouge_l << '\n';
  };
  row("all", r.all);
  row("coref", r.coref_subset);
  out << "pronouns  P " << 100 * r.pronouns.precision << "  R " << 100 * r.pronouns.recall << "  F "
      << 100 * r.pronouns.f << '\n';
  if (r.attention)
    out << std::setprecision(4) << "attention CES " << r.attention->ces << "  HES " << r.attention->hes << "  (n="
        << r.attention->counted << ", excluded " << r.attention->excluded << ")\n";
  return out.str();
}

/// Paired bootstrap: fraction of resamples in which system A's corpus score
/// beats system B's.
template <typename ScoreFn>
double paired_bootstrap(std::span<const Sentence> a, std::span<const Sentence> b, std::span<const Sentence> refs,
                        ScoreFn score, int samples = 1000, std::uint64_t seed = 1) {
  if (a.size() != b.size() || a.size() != refs.size() || a.empty())
    throw std::invalid_argument("paired_bootstrap: aligned non-empty inputs required");
  std::mt19937_64 rng(seed);
  int wins = 0;
  std::vector<Sentence> sa(a.size()), sb(a.size()), sr(a.size());
  for (int s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t k = static_cast<std::size_t>(rng() % a.size());
      sa[i] = a[k];
      sb[i] = b[k];
      sr[i] = refs[k];
    }
    if (score(std::span<const Sentence>(sa), std::span<const Sentence>(sr)) >
        score(std::span<const Sentence>(sb), std::span<const Sentence>(sr)))
      ++wins;
  }
  return static_cast<double>(wins) / samples;
}

}  // namespace coqg::metrics
