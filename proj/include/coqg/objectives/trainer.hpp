#pragma once

#include "coqg/nnet/encoded_example.hpp"
#include "coqg/nnet/graph.hpp"
#include "coqg/nnet/model.hpp"
#include "coqg/objectives/losses.hpp"
#include "coqg/util/kv_config.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace coqg::objectives {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 10;
  double clip_norm = 5.0;
  bool flow_per_step = false;
  std::string optimizer = "adam";  // "adam" or "sgd"
  double stop_below = 0.0;         // end early once validation NLL is below this

  bool set(const std::string& key, const std::string& v) {
    if (key == "learning_rate") learning_rate = util::to_double(key, v);
    else if (key == "batch_size") batch_size = util::to_int(key, v);
    else if (key == "epochs") epochs = util::to_int(key, v);
    else if (key == "clip_norm") clip_norm = util::to_double(key, v);
    else if (key == "flow_per_step") flow_per_step = util::to_bool(key, v);
    else if (key == "optimizer") optimizer = v;
    else if (key == "stop_below") stop_below = util::to_double(key, v);
    else return false;
    return true;
  }

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw util::ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw util::ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw util::ConfigError("epochs must be >= 0");
    if (!(clip_norm > 0.0)) throw util::ConfigError("clip_norm must be positive");
    if (optimizer != "adam" && optimizer != "sgd") throw util::ConfigError("optimizer must be adam or sgd");
  }
};

struct EpochRecord {
  int epoch = 0;
  double nll = 0.0;
  double coref = 0.0;
  double flow = 0.0;
  double total = 0.0;
  double val_nll = 0.0;
};

enum class TrainStatus { Completed, Diverged };

struct TrainReport {
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_nll = std::numeric_limits<double>::infinity();
  TrainStatus status = TrainStatus::Completed;
  std::size_t flow_skipped = 0;  // examples without a CES token
  std::string message;
};

inline std::string training_log_csv(const std::vector<EpochRecord>& log) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,nll,coref,flow,total,val_nll\n";
  for (const auto& r : log)
    out << r.epoch << ',' << r.nll << ',' << r.coref << ',' << r.flow << ',' << r.total << ',' << r.val_nll << '\n';
  return out.str();
}

/// Scales all gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
template <typename S>
double clip_gradients(nnet::Parameters<S>& params, double max_norm) {
  double sq = 0.0;
  for (auto* t : params.tensors()) sq += static_cast<double>(t->grad.squaredNorm());
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const S k = static_cast<S>(max_norm / norm);
    for (auto* t : params.tensors()) t->grad *= k;
  }
  return norm;
}

template <typename S>
void sgd_step(nnet::Parameters<S>& params, double lr) {
  for (auto* t : params.tensors()) t->value -= static_cast<S>(lr) * t->grad;
}

template <typename S>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(nnet::Parameters<S>& params) {
    auto tensors = params.tensors();
    if (m_.empty()) {
      for (auto* t : tensors) {
        m_.push_back(nnet::Matrix<S>::Zero(t->value.rows(), t->value.cols()));
        v_.push_back(nnet::Matrix<S>::Zero(t->value.rows(), t->value.cols()));
      }
    }
    ++t_;
    const S c1 = static_cast<S>(1.0 - std::pow(beta1_, t_));
    const S c2 = static_cast<S>(1.0 - std::pow(beta2_, t_));
    const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      auto& g = tensors[k]->grad;
      m_[k] = b1 * m_[k] + (S(1) - b1) * g;
      v_[k] = b2 * v_[k] + (S(1) - b2) * g.cwiseProduct(g);
      tensors[k]->value.array() -= static_cast<S>(lr_) * (m_[k].array() / c1) /
                                   ((v_[k].array() / c2).sqrt() + static_cast<S>(eps_));
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<nnet::Matrix<S>> m_, v_;
};

/// Mean teacher-forced NLL with dropout off.
template <typename S>
double evaluate_nll(nnet::CfNet<S>& model, std::span<const nnet::EncodedExample> data) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : data) {
    Graph<S> g(false);
    const auto steps = model.forward(g, ex);
    sum += static_cast<double>(g.scalar(nll_loss(g, std::span<const StepOutput>(steps), ex.target_ids)));
  }
  return sum / static_cast<double>(data.size());
}

/// Mini-batch training with gradient-norm clipping. After every epoch the
/// validation NLL is measured (training NLL if there is no validation data)
/// and the best parameters are kept; the model ends holding them. A
/// non-finite loss or parameter stops training and restores the last good
/// parameters.
template <typename S>
TrainReport train(nnet::CfNet<S>& model, std::span<const nnet::EncodedExample> train_set,
                  std::span<const nnet::EncodedExample> validation, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  TrainReport report;
  const LossWeights weights = LossWeights::from(model.config(), cfg.flow_per_step);
  std::mt19937_64 rng(model.config().seed ^ 0x9e3779b97f4a7c15ULL);
  Adam<S> adam(cfg.learning_rate);
  nnet::Parameters<S> best = model.params();
  auto& params = model.params();
  params.zero_grad();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  auto diverge = [&](const std::string& why) {
    report.status = TrainStatus::Diverged;
    report.message = why;
    model.params() = best;
    return report;
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      params.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train_set[order[k]];
        Graph<S> g(true, &rng);
        const auto steps = model.forward(g, ex);
        const auto loss = joint_loss(g, ex, std::span<const StepOutput>(steps), weights);
        if (!std::isfinite(loss.breakdown.total))
          return diverge("non-finite loss at epoch " + std::to_string(epoch));
        if ((weights.lambda3 > 0.0 || weights.lambda4 > 0.0) && !loss.breakdown.has_flow && epoch == 1)
          ++report.flow_skipped;
        g.backward(loss.total);
        rec.nll += loss.breakdown.nll;
        rec.coref += loss.breakdown.coref;
        rec.flow += loss.breakdown.flow;
        rec.total += loss.breakdown.total;
      }
      const S inv = S(1) / static_cast<S>(end - start);
      for (auto* t : params.tensors()) t->grad *= inv;
      const double norm = clip_gradients(params, cfg.clip_norm);
      if (!std::isfinite(norm)) return diverge("non-finite gradient at epoch " + std::to_string(epoch));
      if (cfg.optimizer == "sgd")
        sgd_step(params, cfg.learning_rate);
      else
        adam.step(params);
      if (!params.finite()) return diverge("non-finite parameters at epoch " + std::to_string(epoch));
    }
    const double n = std::max<double>(1.0, static_cast<double>(train_set.size()));
    rec.nll /= n;
    rec.coref /= n;
    rec.flow /= n;
    rec.total /= n;
    rec.val_nll = validation.empty() ? evaluate_nll(model, train_set) : evaluate_nll(model, validation);
    if (!std::isfinite(rec.val_nll)) return diverge("non-finite validation loss at epoch " + std::to_string(epoch));
    if (rec.val_nll < report.best_val_nll) {
      report.best_val_nll = rec.val_nll;
      report.best_epoch = epoch;
      best = params;
    }
    report.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_nll < cfg.stop_below) break;
  }
  model.params() = best;
  params.zero_grad();
  return report;
}

}  // namespace coqg::objectives
