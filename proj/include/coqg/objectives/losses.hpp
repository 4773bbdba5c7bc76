#pragma once

#include "coqg/corpus/types.hpp"
#include "coqg/nnet/config.hpp"
#include "coqg/nnet/encoded_example.hpp"
#include "coqg/nnet/graph.hpp"
#include "coqg/nnet/model.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace coqg::objectives {

using nnet::Graph;
using nnet::StepOutput;
using nnet::Var;

struct LossBreakdown {
  double nll = 0.0;
  double coref = 0.0;
  double flow = 0.0;
  double total = 0.0;
  bool has_coref = false;
  bool has_flow = false;
};

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double lambda4 = 0.5;
  bool flow_per_step = false;

  static LossWeights from(const nnet::ModelConfig& c, bool flow_per_step = false) {
    return {c.lambda1, c.lambda2, c.lambda3, c.lambda4, flow_per_step};
  }
};

inline constexpr double kProbabilityFloor = 1e-12;

/// -(l1 * log(ratio) + l2 * log(p_coref)) * s_c
inline double coref_loss_value(double mention_ratio, double p_coref, double lambda1, double lambda2, double confidence) {
  return -(lambda1 * std::log(std::max(mention_ratio, kProbabilityFloor)) +
           lambda2 * std::log(std::max(p_coref, kProbabilityFloor))) *
         confidence;
}

/// -l3 * log(ces_ratio) + l4 * hes_ratio
inline double flow_loss_value(double ces_ratio, double hes_ratio, double lambda3, double lambda4) {
  return -lambda3 * std::log(std::max(ces_ratio, kProbabilityFloor)) + lambda4 * hes_ratio;
}

/// Mean over steps of -log P(target_t), probabilities floored at 1e-12.
template <typename S>
Var nll_loss(Graph<S>& g, std::span<const StepOutput> steps, std::span<const int> targets) {
  if (steps.size() != targets.size() || steps.empty())
    throw std::invalid_argument("nll_loss: need one target per step");
  std::vector<Var> terms;
  terms.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t)
    terms.push_back(g.log(g.element(steps[t].final_dist, targets[t]), S(kProbabilityFloor)));
  return g.scale(g.sum(g.concat_rows(terms)), S(-1) / static_cast<S>(steps.size()));
}

/// Coreference alignment loss at the pronoun's teacher-forced step. The
/// mention ratio is normalised over history attention only.
template <typename S>
Var coref_loss(Graph<S>& g, std::span<const StepOutput> steps, const corpus::CorefAnnotation& coref,
               std::span<const int> targets, double lambda1, double lambda2) {
  if (coref.pronoun < 0 || static_cast<std::size_t>(coref.pronoun) >= steps.size())
    throw std::logic_error("coref_loss: pronoun position outside the decoded sequence");
  const StepOutput& step = steps[static_cast<std::size_t>(coref.pronoun)];
  if (!step.beta.valid())
    throw std::logic_error("coref_loss: annotation present but history attention is empty");
  // Softmax of the history logits alone equals beta / sum(beta), and stays
  // well defined when the history's share of the unified softmax underflows.
  const Var history = g.softmax_cols(g.rows(step.scores, g.value(step.alpha).rows(), g.value(step.beta).rows()));
  const Var ratio = g.sum_rows(history, coref.mention_positions);
  const Var p_coref = g.element(step.final_dist, targets[static_cast<std::size_t>(coref.pronoun)]);
  const Var inner = g.add(g.scale(g.log(ratio, S(kProbabilityFloor)), static_cast<S>(lambda1)),
                          g.scale(g.log(p_coref, S(kProbabilityFloor)), static_cast<S>(lambda2)));
  return g.scale(inner, static_cast<S>(-coref.confidence));
}

namespace detail {

// CES and HES shares of passage attention summed over `steps`. The shares are
// a softmax over every (step, token) passage log-weight, which is the summed
// attention normalised by its total without dividing by that total.
template <typename S>
Var flow_term(Graph<S>& g, std::span<const StepOutput> steps, std::span<const int> ces, std::span<const int> hes,
              double lambda3, double lambda4) {
  const Eigen::Index passage = g.value(steps.front().alpha).rows();
  std::vector<Var> logs;
  std::vector<int> ces_all, hes_all;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    logs.push_back(g.rows(g.log_softmax_cols(steps[t].scores), 0, passage));
    const int base = static_cast<int>(t * static_cast<std::size_t>(passage));
    for (int j : ces) ces_all.push_back(base + j);
    for (int j : hes) hes_all.push_back(base + j);
  }
  const Var share = g.softmax_cols(g.concat_rows(logs));
  Var loss = g.scale(g.log(g.sum_rows(share, ces_all), S(kProbabilityFloor)), static_cast<S>(-lambda3));
  if (!hes_all.empty()) loss = g.add(loss, g.scale(g.sum_rows(share, hes_all), static_cast<S>(lambda4)));
  return loss;
}

}  // namespace detail

/// Flow loss over passage attention. By default alpha is averaged over the
/// decoding steps first; with `per_step` the loss is the mean of per-step
/// losses. Returns nothing when the passage has no CES token.
template <typename S>
std::optional<Var> flow_loss(Graph<S>& g, std::span<const StepOutput> steps,
                             std::span<const corpus::Evidence> token_evidence, double lambda3, double lambda4,
                             bool per_step = false) {
  std::vector<int> ces, hes;
  for (std::size_t j = 0; j < token_evidence.size(); ++j) {
    if (token_evidence[j] == corpus::Evidence::CES) ces.push_back(static_cast<int>(j));
    if (token_evidence[j] == corpus::Evidence::HES) hes.push_back(static_cast<int>(j));
  }
  if (ces.empty() || steps.empty()) return std::nullopt;
  if (per_step) {
    std::vector<Var> terms;
    for (std::size_t t = 0; t < steps.size(); ++t)
      terms.push_back(detail::flow_term(g, steps.subspan(t, 1), ces, hes, lambda3, lambda4));
    return g.scale(g.sum(g.concat_rows(terms)), S(1) / static_cast<S>(steps.size()));
  }
  return detail::flow_term(g, steps, ces, hes, lambda3, lambda4);
}

template <typename S>
struct JointLoss {
  Var total;
  LossBreakdown breakdown;
};

/// L = L_nll + L_coref + L_flow; absent annotations contribute 0.
template <typename S>
JointLoss<S> joint_loss(Graph<S>& g, const nnet::EncodedExample& ex, std::span<const StepOutput> steps,
                        const LossWeights& w) {
  JointLoss<S> out;
  const Var nll = nll_loss(g, steps, ex.target_ids);
  out.total = nll;
  out.breakdown.nll = static_cast<double>(g.scalar(nll));
  if (ex.coref && (w.lambda1 > 0.0 || w.lambda2 > 0.0)) {
    const Var c = coref_loss(g, steps, *ex.coref, ex.target_ids, w.lambda1, w.lambda2);
    out.total = g.add(out.total, c);
    out.breakdown.coref = static_cast<double>(g.scalar(c));
    out.breakdown.has_coref = true;
  }
  if (w.lambda3 > 0.0 || w.lambda4 > 0.0) {
    if (auto f = flow_loss(g, steps, ex.token_evidence, w.lambda3, w.lambda4, w.flow_per_step)) {
      out.total = g.add(out.total, *f);
      out.breakdown.flow = static_cast<double>(g.scalar(*f));
      out.breakdown.has_flow = true;
    }
  }
  out.breakdown.total = static_cast<double>(g.scalar(out.total));
  return out;
}

}  // namespace coqg::objectives
