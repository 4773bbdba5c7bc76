#pragma once

// Reverse-mode differentiation over dense Eigen matrices.
//
// A Graph records every operation applied to its nodes; backward() replays
// the records in reverse order. Column vectors are n x 1 matrices. Parameter
// tensors live outside the graph and receive their gradients when the graph
// is differentiated.

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace coqg::nnet {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// A named learnable tensor with its accumulated gradient.
template <typename S>
struct Tensor {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix<S>::Zero(rows, cols)), grad(Matrix<S>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

struct Var {
  std::size_t id = std::numeric_limits<std::size_t>::max();
  bool valid() const { return id != std::numeric_limits<std::size_t>::max(); }
};

template <typename S>
class Graph {
 public:
  using Mat = Matrix<S>;

  explicit Graph(bool training = false, std::mt19937_64* rng = nullptr) : training_(training), rng_(rng) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }
  std::size_t size() const { return nodes_.size(); }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  S scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  Var constant(Mat v) { return push(std::move(v), {}); }

  Var scalar_constant(S s) {
    Mat m(1, 1);
    m(0, 0) = s;
    return constant(std::move(m));
  }

  /// Node mirroring a parameter tensor; one node per tensor per graph.
  Var param(Tensor<S>& t) {
    if (auto it = param_nodes_.find(&t); it != param_nodes_.end()) return it->second;
    Var out = push(t.value, {});
    nodes_[out.id].backward = [this, out, &t] { t.grad += nodes_[out.id].grad; };
    param_nodes_.emplace(&t, out);
    return out;
  }

  /// Columns of an embedding table; gradients scatter straight into the table.
  Var lookup(Tensor<S>& table, std::span<const int> ids) {
    Mat out(table.value.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] < 0 || ids[k] >= table.value.cols())
        throw std::out_of_range("lookup: index " + std::to_string(ids[k]) + " outside table " + table.name);
      out.col(static_cast<Eigen::Index>(k)) = table.value.col(ids[k]);
    }
    std::vector<int> idx(ids.begin(), ids.end());
    Var r = push(std::move(out), {});
    nodes_[r.id].backward = [this, r, &table, idx = std::move(idx)] {
      const Mat& g = nodes_[r.id].grad;
      for (std::size_t k = 0; k < idx.size(); ++k) table.grad.col(idx[k]) += g.col(static_cast<Eigen::Index>(k));
    };
    return r;
  }

  Var matmul(Var a, Var b) {
    Var r = push(value(a) * value(b), {});
    on_backward(r, [this, a, b, r] {
      const Mat& g = nodes_[r.id].grad;
      accumulate(a, g * value(b).transpose());
      accumulate(b, value(a).transpose() * g);
    });
    return r;
  }

  /// a^T b
  Var transpose_matmul(Var a, Var b) {
    Var r = push(value(a).transpose() * value(b), {});
    on_backward(r, [this, a, b, r] {
      const Mat& g = nodes_[r.id].grad;
      accumulate(a, value(b) * g.transpose());
      accumulate(b, value(a) * g);
    });
    return r;
  }

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Var r = push(value(a) + value(b), {});
    on_backward(r, [this, a, b, r] {
      accumulate(a, nodes_[r.id].grad);
      accumulate(b, nodes_[r.id].grad);
    });
    return r;
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Var r = push(value(a) - value(b), {});
    on_backward(r, [this, a, b, r] {
      accumulate(a, nodes_[r.id].grad);
      accumulate(b, -nodes_[r.id].grad);
    });
    return r;
  }

  /// Adds the column vector `bias` to every column of `a`.
  Var add_bias(Var a, Var bias) {
    if (value(bias).cols() != 1 || value(bias).rows() != value(a).rows())
      throw std::invalid_argument("add_bias: shape mismatch");
    Var r = push(value(a).colwise() + value(bias).col(0), {});
    on_backward(r, [this, a, bias, r] {
      accumulate(a, nodes_[r.id].grad);
      accumulate(bias, nodes_[r.id].grad.rowwise().sum());
    });
    return r;
  }

  Var cwise_mul(Var a, Var b) {
    check_same_shape(a, b, "cwise_mul");
    Var r = push(value(a).cwiseProduct(value(b)), {});
    on_backward(r, [this, a, b, r] {
      const Mat& g = nodes_[r.id].grad;
      accumulate(a, g.cwiseProduct(value(b)));
      accumulate(b, g.cwiseProduct(value(a)));
    });
    return r;
  }

  /// Every entry of `a` times the 1x1 node `s`.
  Var scale_by(Var a, Var s) {
    const S k = scalar(s);
    Var r = push(value(a) * k, {});
    on_backward(r, [this, a, s, r, k] {
      const Mat& g = nodes_[r.id].grad;
      accumulate(a, g * k);
      accumulate_scalar(s, g.cwiseProduct(value(a)).sum());
    });
    return r;
  }

  Var scale(Var a, S k) {
    Var r = push(value(a) * k, {});
    on_backward(r, [this, a, r, k] { accumulate(a, nodes_[r.id].grad * k); });
    return r;
  }

  Var one_minus(Var a) {
    Var r = push((S(1) - value(a).array()).matrix(), {});
    on_backward(r, [this, a, r] { accumulate(a, -nodes_[r.id].grad); });
    return r;
  }

  Var tanh(Var a) {
    Var r = push(value(a).array().tanh().matrix(), {});
    on_backward(r, [this, a, r] {
      const auto& y = nodes_[r.id].value.array();
      accumulate(a, (nodes_[r.id].grad.array() * (S(1) - y * y)).matrix());
    });
    return r;
  }

  Var sigmoid(Var a) {
    Var r = push(sigmoid_of(value(a)), {});
    on_backward(r, [this, a, r] {
      const auto& y = nodes_[r.id].value.array();
      accumulate(a, (nodes_[r.id].grad.array() * y * (S(1) - y)).matrix());
    });
    return r;
  }

  /// Natural log with inputs clamped from below at `floor`.
  Var log(Var a, S floor = S(1e-12)) {
    const Mat& x = value(a);
    Var r = push(x.array().max(floor).log().matrix(), {});
    on_backward(r, [this, a, r, floor] {
      const Mat& xv = value(a);
      Mat g = nodes_[r.id].grad;
      for (Eigen::Index k = 0; k < g.size(); ++k) g(k) = xv(k) > floor ? g(k) / xv(k) : S(0);
      accumulate(a, g);
    });
    return r;
  }

  /// Softmax of each column, stabilised by subtracting the column max.
  Var softmax_cols(Var a) {
    const Mat& x = value(a);
    Mat y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const S mx = x.col(c).maxCoeff();
      y.col(c) = (x.col(c).array() - mx).exp().matrix();
      y.col(c) /= y.col(c).sum();
    }
    Var r = push(std::move(y), {});
    on_backward(r, [this, a, r] {
      const Mat& yv = nodes_[r.id].value;
      const Mat& g = nodes_[r.id].grad;
      Mat dx(yv.rows(), yv.cols());
      for (Eigen::Index c = 0; c < yv.cols(); ++c) {
        const S dot = yv.col(c).dot(g.col(c));
        dx.col(c) = yv.col(c).cwiseProduct((g.col(c).array() - dot).matrix());
      }
      accumulate(a, dx);
    });
    return r;
  }

  /// log(softmax) of each column, computed without forming the softmax.
  Var log_softmax_cols(Var a) {
    const Mat& x = value(a);
    Mat y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const S mx = x.col(c).maxCoeff();
      const S lse = mx + std::log((x.col(c).array() - mx).exp().sum());
      y.col(c) = (x.col(c).array() - lse).matrix();
    }
    Var r = push(std::move(y), {});
    on_backward(r, [this, a, r] {
      const Mat& yv = nodes_[r.id].value;
      const Mat& g = nodes_[r.id].grad;
      Mat dx(yv.rows(), yv.cols());
      for (Eigen::Index c = 0; c < yv.cols(); ++c)
        dx.col(c) = g.col(c) - (yv.col(c).array().exp() * g.col(c).sum()).matrix();
      accumulate(a, dx);
    });
    return r;
  }

  Var concat_rows(std::span<const Var> parts) {
    Eigen::Index rows = 0;
    const Eigen::Index cols = value(parts.front()).cols();
    for (Var p : parts) {
      if (value(p).cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
      rows += value(p).rows();
    }
    Mat out(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      out.middleRows(at, value(p).rows()) = value(p);
      at += value(p).rows();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    Var r = push(std::move(out), {});
    on_backward(r, [this, r, ps = std::move(ps)] {
      Eigen::Index off = 0;
      for (Var p : ps) {
        const Eigen::Index n = value(p).rows();
        accumulate(p, nodes_[r.id].grad.middleRows(off, n));
        off += n;
      }
    });
    return r;
  }

  Var concat_rows(std::initializer_list<Var> parts) {
    return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
  }

  Var concat_cols(std::span<const Var> parts) {
    Eigen::Index cols = 0;
    const Eigen::Index rows = value(parts.front()).rows();
    for (Var p : parts) {
      if (value(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
      cols += value(p).cols();
    }
    Mat out(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      out.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    Var r = push(std::move(out), {});
    on_backward(r, [this, r, ps = std::move(ps)] {
      Eigen::Index off = 0;
      for (Var p : ps) {
        const Eigen::Index n = value(p).cols();
        accumulate(p, nodes_[r.id].grad.middleCols(off, n));
        off += n;
      }
    });
    return r;
  }

  Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
  }

  Var rows(Var a, Eigen::Index start, Eigen::Index n) {
    Var r = push(value(a).middleRows(start, n), {});
    on_backward(r, [this, a, r, start, n] {
      Mat g = Mat::Zero(value(a).rows(), value(a).cols());
      g.middleRows(start, n) = nodes_[r.id].grad;
      accumulate(a, g);
    });
    return r;
  }

  Var cols(Var a, Eigen::Index start, Eigen::Index n) {
    Var r = push(value(a).middleCols(start, n), {});
    on_backward(r, [this, a, r, start, n] {
      Node& src = nodes_[a.id];
      if (src.grad.size() == 0) src.grad = Mat::Zero(src.value.rows(), src.value.cols());
      src.grad.middleCols(start, n) += nodes_[r.id].grad;
    });
    return r;
  }

  Var sum(Var a) {
    Mat out(1, 1);
    out(0, 0) = value(a).sum();
    Var r = push(std::move(out), {});
    on_backward(r, [this, a, r] {
      accumulate(a, Mat::Constant(value(a).rows(), value(a).cols(), nodes_[r.id].grad(0, 0)));
    });
    return r;
  }

  /// Mean over columns: (rows x cols) -> (rows x 1).
  Var mean_cols(Var a) {
    const Eigen::Index n = value(a).cols();
    Var r = push(value(a).rowwise().mean(), {});
    on_backward(r, [this, a, r, n] {
      accumulate(a, nodes_[r.id].grad.replicate(1, n) / static_cast<S>(n));
    });
    return r;
  }

  /// Rows of a column vector picked by index, repetition allowed.
  Var gather_rows(Var a, std::span<const int> idx) {
    Mat out(static_cast<Eigen::Index>(idx.size()), 1);
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k), 0) = value(a)(idx[k], 0);
    std::vector<int> ix(idx.begin(), idx.end());
    Var r = push(std::move(out), {});
    on_backward(r, [this, a, r, ix = std::move(ix)] {
      Mat g = Mat::Zero(value(a).rows(), 1);
      for (std::size_t k = 0; k < ix.size(); ++k) g(ix[k], 0) += nodes_[r.id].grad(static_cast<Eigen::Index>(k), 0);
      accumulate(a, g);
    });
    return r;
  }

  /// Sum of the selected entries of a column vector, as a 1x1 node.
  Var sum_rows(Var a, std::span<const int> idx) {
    S total = 0;
    for (int i : idx) total += value(a)(i, 0);
    Mat out(1, 1);
    out(0, 0) = total;
    std::vector<int> ix(idx.begin(), idx.end());
    Var r = push(std::move(out), {});
    on_backward(r, [this, a, r, ix = std::move(ix)] {
      Mat g = Mat::Zero(value(a).rows(), 1);
      for (int i : ix) g(i, 0) += nodes_[r.id].grad(0, 0);
      accumulate(a, g);
    });
    return r;
  }

  Var element(Var a, Eigen::Index row, Eigen::Index col = 0) {
    Mat out(1, 1);
    out(0, 0) = value(a)(row, col);
    Var r = push(std::move(out), {});
    on_backward(r, [this, a, r, row, col] {
      Mat g = Mat::Zero(value(a).rows(), value(a).cols());
      g(row, col) = nodes_[r.id].grad(0, 0);
      accumulate(a, g);
    });
    return r;
  }

  /// 1x1 division a / b.
  Var divide(Var a, Var b) {
    const S av = scalar(a), bv = scalar(b);
    Mat out(1, 1);
    out(0, 0) = av / bv;
    Var r = push(std::move(out), {});
    on_backward(r, [this, a, b, r, bv] {
      const S g = nodes_[r.id].grad(0, 0);
      // (a / b) / b rather than a / b^2, which underflows in float.
      accumulate_scalar(a, g / bv);
      accumulate_scalar(b, -g * (scalar(r) / bv));
    });
    return r;
  }

  /// Scatters a column vector into `size` slots: out[target[k]] += a[k].
  Var scatter_add(Var a, std::span<const int> target, Eigen::Index size) {
    Mat out = Mat::Zero(size, 1);
    for (std::size_t k = 0; k < target.size(); ++k) out(target[k], 0) += value(a)(static_cast<Eigen::Index>(k), 0);
    std::vector<int> tg(target.begin(), target.end());
    Var r = push(std::move(out), {});
    on_backward(r, [this, a, r, tg = std::move(tg)] {
      Mat g(static_cast<Eigen::Index>(tg.size()), 1);
      for (std::size_t k = 0; k < tg.size(); ++k) g(static_cast<Eigen::Index>(k), 0) = nodes_[r.id].grad(tg[k], 0);
      accumulate(a, g);
    });
    return r;
  }

  /// Zero-pads a column vector to `size` rows.
  Var pad_rows(Var a, Eigen::Index size) {
    const Eigen::Index n = value(a).rows();
    if (size == n) return a;
    Mat out = Mat::Zero(size, value(a).cols());
    out.topRows(n) = value(a);
    Var r = push(std::move(out), {});
    on_backward(r, [this, a, r, n] { accumulate(a, nodes_[r.id].grad.topRows(n)); });
    return r;
  }

  /// Inverted dropout; identity outside training or at rate 0.
  Var dropout(Var a, S rate) {
    if (!training_ || rate <= S(0) || rng_ == nullptr) return a;
    std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
    Mat mask(value(a).rows(), value(a).cols());
    const S scale_up = S(1) / (S(1) - rate);
    for (Eigen::Index k = 0; k < mask.size(); ++k) mask(k) = keep(*rng_) ? scale_up : S(0);
    Var r = push(value(a).cwiseProduct(mask), {});
    on_backward(r, [this, a, r, mask = std::move(mask)] { accumulate(a, nodes_[r.id].grad.cwiseProduct(mask)); });
    return r;
  }

  /// One LSTM cell. `gates` holds pre-activations [i; f; g; o] (4H x 1);
  /// returns the stacked [h; c] (2H x 1).
  Var lstm_cell(Var gates, Var c_prev) {
    const Mat& z = value(gates);
    const Eigen::Index h = z.rows() / 4;
    if (z.rows() != 4 * h || value(c_prev).rows() != h) throw std::invalid_argument("lstm_cell: shape mismatch");
    Mat act(4 * h, 1);
    act.topRows(2 * h) = sigmoid_of(Mat(z.topRows(2 * h)));
    act.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
    act.bottomRows(h) = sigmoid_of(Mat(z.bottomRows(h)));
    const auto i = act.topRows(h).array();
    const auto f = act.middleRows(h, h).array();
    const auto g = act.middleRows(2 * h, h).array();
    const auto o = act.bottomRows(h).array();
    Mat out(2 * h, 1);
    out.bottomRows(h) = (f * value(c_prev).array() + i * g).matrix();
    out.topRows(h) = (o * out.bottomRows(h).array().tanh()).matrix();
    Var r = push(std::move(out), {});
    on_backward(r, [this, gates, c_prev, r, h, act = std::move(act)] {
      const Mat& gr = nodes_[r.id].grad;
      const auto i = act.topRows(h).array();
      const auto f = act.middleRows(h, h).array();
      const auto g = act.middleRows(2 * h, h).array();
      const auto o = act.bottomRows(h).array();
      const auto c = nodes_[r.id].value.bottomRows(h).array();
      const Eigen::Array<S, Eigen::Dynamic, 1> tc = c.tanh();
      const auto dh = gr.topRows(h).array();
      const Eigen::Array<S, Eigen::Dynamic, 1> dc = gr.bottomRows(h).array() + dh * o * (S(1) - tc * tc);
      Mat dz(4 * h, 1);
      dz.topRows(h) = (dc * g * i * (S(1) - i)).matrix();
      dz.middleRows(h, h) = (dc * value(c_prev).array() * f * (S(1) - f)).matrix();
      dz.middleRows(2 * h, h) = (dc * i * (S(1) - g * g)).matrix();
      dz.bottomRows(h) = (dh * tc * o * (S(1) - o)).matrix();
      accumulate(gates, dz);
      accumulate(c_prev, (dc * f).matrix());
    });
    return r;
  }

  /// Seeds d(root)/d(root) = 1 and propagates to every reachable node and
  /// parameter tensor.
  void backward(Var root) {
    if (value(root).size() != 1) throw std::invalid_argument("backward: root must be a scalar");
    nodes_[root.id].grad = Mat::Ones(1, 1);
    for (std::size_t k = root.id + 1; k-- > 0;) {
      Node& n = nodes_[k];
      if (n.backward && n.grad.size() != 0) n.backward();
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> backward;
  };

  static Mat sigmoid_of(const Mat& x) { return (S(1) / (S(1) + (-x.array()).exp())).matrix(); }

  Var push(Mat value, std::function<void()> back) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(back)});
    return Var{nodes_.size() - 1};
  }

  void on_backward(Var r, std::function<void()> back) { nodes_[r.id].backward = std::move(back); }

  template <typename Expr>
  void accumulate(Var v, const Expr& g) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  void accumulate_scalar(Var v, S g) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(1, 1);
    n.grad(0, 0) += g;
  }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
      throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }

  bool training_;
  std::mt19937_64* rng_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<S>*, Var> param_nodes_;
};

}  // namespace coqg::nnet
