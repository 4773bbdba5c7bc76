#pragma once

#include "coqg/corpus/vocabulary.hpp"
#include "coqg/nnet/encoded_example.hpp"
#include "coqg/nnet/graph.hpp"
#include "coqg/nnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace coqg::decode {

struct BeamOptions {
  int beam_size = 5;
  int max_len = 15;
  bool block_unigrams = true;
};

struct StepTrace {
  std::vector<double> alpha;  // passage attention
  std::vector<double> beta;   // history attention
  double p_gen = 0.0;
};

struct GenerationResult {
  std::vector<int> ids;             // extended ids, EOS excluded
  std::vector<std::string> tokens;  // UNKs replaced by the most attended source token
  double log_prob = 0.0;
  double score = 0.0;  // log_prob / steps (EOS counts as a step)
  bool finished = false;
  std::vector<StepTrace> trace;

  std::string text() const {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }
};

namespace detail {

template <typename S>
StepTrace trace_of(const nnet::Graph<S>& g, const nnet::StepOutput& step) {
  StepTrace t;
  const auto& a = g.value(step.alpha);
  t.alpha.assign(a.data(), a.data() + a.size());
  if (step.beta.valid()) {
    const auto& b = g.value(step.beta);
    t.beta.assign(b.data(), b.data() + b.size());
  }
  t.p_gen = static_cast<double>(g.scalar(step.p_gen));
  return t;
}

inline std::string emit(int id, const nnet::EncodedExample& ex, const corpus::Vocabulary& vocab,
                        const StepTrace& trace) {
  if (id != corpus::Vocabulary::kUnk) return ex.token_text(id, vocab);
  // Highest attention over the unified memory (passage then history).
  std::size_t best = 0;
  double best_w = -1.0;
  for (std::size_t k = 0; k < trace.alpha.size(); ++k)
    if (trace.alpha[k] > best_w) best_w = trace.alpha[k], best = k;
  for (std::size_t k = 0; k < trace.beta.size(); ++k)
    if (trace.beta[k] > best_w) best_w = trace.beta[k], best = trace.alpha.size() + k;
  return ex.source_tokens.empty() ? vocab.token(id) : ex.source_tokens[best];
}

inline bool allowed(int id, const std::vector<int>& so_far, bool block) {
  if (id == corpus::Vocabulary::kPad || id == corpus::Vocabulary::kBos) return false;
  return !(block && std::find(so_far.begin(), so_far.end(), id) != so_far.end());
}

}  // namespace detail

/// Argmax decoding with the same token constraints as beam_search.
template <typename S>
GenerationResult greedy_decode(nnet::CfNet<S>& model, const nnet::EncodedExample& ex,
                               const corpus::Vocabulary& vocab, int max_len = 15, bool block_unigrams = true) {
  nnet::Graph<S> g(false);
  const auto enc = model.encode(g, ex);
  nnet::DecoderState state = enc.initial;
  GenerationResult out;
  int prev = corpus::Vocabulary::kBos;
  for (int t = 0; t < max_len; ++t) {
    const auto step = model.decode_step(g, enc, ex, prev, state);
    const auto& dist = g.value(step.final_dist);
    int best = -1;
    for (int id = 0; id < static_cast<int>(dist.rows()); ++id) {
      if (!detail::allowed(id, out.ids, block_unigrams)) continue;
      if (best < 0 || dist(id, 0) > dist(best, 0)) best = id;
    }
    out.log_prob += std::log(std::max(static_cast<double>(dist(best, 0)), 1e-300));
    auto tr = detail::trace_of(g, step);
    if (best == corpus::Vocabulary::kEos) {
      out.trace.push_back(std::move(tr));
      out.finished = true;
      break;
    }
    out.tokens.push_back(detail::emit(best, ex, vocab, tr));
    out.trace.push_back(std::move(tr));
    out.ids.push_back(best);
    state = step.state;
    prev = best;
  }
  out.score = out.log_prob / static_cast<double>(std::max<std::size_t>(1, out.trace.size()));
  return out;
}

/// Beam search over the extended vocabulary. Each step keeps the k best
/// expansions overall; expansions ending in EOS leave the beam as finished
/// hypotheses, so the beam shrinks. With blocking on, a token already in a
/// hypothesis is never proposed again. The winner is the finished hypothesis
/// with the highest per-step average log-probability, or the best unfinished
/// one (finished = false) if none ended.
template <typename S>
GenerationResult beam_search(nnet::CfNet<S>& model, const nnet::EncodedExample& ex, const corpus::Vocabulary& vocab,
                             const BeamOptions& opt = {}) {
  struct Hyp {
    GenerationResult result;
    nnet::DecoderState state;
    int last = corpus::Vocabulary::kBos;
  };
  struct Candidate {
    std::size_t parent;
    int token;
    double log_prob;
  };
  const int k = std::max(1, opt.beam_size);

  nnet::Graph<S> g(false);
  const auto enc = model.encode(g, ex);
  std::vector<Hyp> live(1);
  live[0].state = enc.initial;
  std::vector<GenerationResult> finished;

  for (int t = 0; t < opt.max_len && !live.empty(); ++t) {
    std::vector<nnet::StepOutput> outs;
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < live.size(); ++h) {
      outs.push_back(model.decode_step(g, enc, ex, live[h].last, live[h].state));
      const auto& dist = g.value(outs.back().final_dist);
      std::vector<Candidate> local;
      for (int id = 0; id < static_cast<int>(dist.rows()); ++id) {
        if (!detail::allowed(id, live[h].result.ids, opt.block_unigrams)) continue;
        local.push_back({h, id, live[h].result.log_prob + std::log(std::max(static_cast<double>(dist(id, 0)), 1e-300))});
      }
      const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), local.size());
      std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep), local.end(),
                        [](const Candidate& a, const Candidate& b) {
                          return a.log_prob != b.log_prob ? a.log_prob > b.log_prob : a.token < b.token;
                        });
      cands.insert(cands.end(), local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });
    if (cands.size() > static_cast<std::size_t>(k)) cands.resize(static_cast<std::size_t>(k));

    std::vector<Hyp> next;
    for (const auto& c : cands) {
      const Hyp& parent = live[c.parent];
      GenerationResult r = parent.result;
      r.log_prob = c.log_prob;
      auto tr = detail::trace_of(g, outs[c.parent]);
      if (c.token == corpus::Vocabulary::kEos) {
        r.trace.push_back(std::move(tr));
        r.finished = true;
        r.score = r.log_prob / static_cast<double>(r.trace.size());
        finished.push_back(std::move(r));
        continue;
      }
      r.tokens.push_back(detail::emit(c.token, ex, vocab, tr));
      r.trace.push_back(std::move(tr));
      r.ids.push_back(c.token);
      r.score = r.log_prob / static_cast<double>(r.trace.size());
      next.push_back(Hyp{std::move(r), outs[c.parent].state, c.token});
    }
    live = std::move(next);
  }

  auto better = [](const GenerationResult& a, const GenerationResult& b) { return a.score > b.score; };
  if (!finished.empty()) return *std::min_element(finished.begin(), finished.end(), better);
  GenerationResult best;
  best.score = -std::numeric_limits<double>::infinity();
  for (const auto& h : live)
    if (h.result.score > best.score) best = h.result;
  best.finished = false;
  return best;
}

}  // namespace coqg::decode
