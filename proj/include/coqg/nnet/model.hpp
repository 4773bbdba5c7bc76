#pragma once

// Multi-source encoder / attentional copy decoder.
//
// Passage tokens enter as [word; answer position; turn number; chunk] and go
// through a bi-LSTM followed by gated self-matching. History turns are each
// run through a token-level bi-LSTM whose end states feed a context-level
// bi-LSTM. The decoder attends over the unified memory (passage states
// followed by all history token states) and mixes a vocabulary softmax with
// a copy distribution over the same memory.

#include "coqg/corpus/vocabulary.hpp"
#include "coqg/nnet/config.hpp"
#include "coqg/nnet/encoded_example.hpp"
#include "coqg/nnet/graph.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace coqg::nnet {

template <typename S>
struct LstmWeights {
  Tensor<S> input;      // 4H x in
  Tensor<S> recurrent;  // 4H x H
  Tensor<S> bias;       // 4H x 1, gate order [i; f; g; o]

  LstmWeights() = default;
  LstmWeights(const std::string& name, int in, int hidden)
      : input(name + ".input", 4 * hidden, in),
        recurrent(name + ".recurrent", 4 * hidden, hidden),
        bias(name + ".bias", 4 * hidden, 1) {}

  int hidden() const { return static_cast<int>(recurrent.value.cols()); }
};

template <typename S>
struct Parameters {
  Tensor<S> word;         // word_dim x V
  Tensor<S> answer_pos;   // answer_pos_dim x 3
  Tensor<S> turn;         // turn_dim x n_max
  Tensor<S> chunk;        // chunk_dim x L
  LstmWeights<S> passage_fwd, passage_bwd;
  LstmWeights<S> turn_fwd, turn_bwd;        // token level, per history turn
  LstmWeights<S> context_fwd, context_bwd;  // across history turns
  LstmWeights<S> decoder;
  Tensor<S> self_match;   // W_s, 2H x 2H
  Tensor<S> fuse, fuse_bias;  // W_f, 2H x 4H
  Tensor<S> gate, gate_bias;  // W_g, 2H x 4H
  Tensor<S> attend_passage;   // W_p, 2H x H
  Tensor<S> attend_token;     // W_w, 2H x H
  Tensor<S> attend_turn;      // W_c, 2H x H
  Tensor<S> readout;          // W_a, H x 3H
  Tensor<S> vocab_proj, vocab_bias;  // W_v, b_v
  Tensor<S> copy_gate, copy_bias;    // 1 x (2H + H + word_dim)
  Tensor<S> init_proj, init_bias;    // H x 2H

  Parameters() = default;

  explicit Parameters(const ModelConfig& c) {
    const int h = c.hidden_dim, m = c.memory_dim(), v = c.vocab_size;
    word = Tensor<S>("word", c.word_dim, v);
    answer_pos = Tensor<S>("answer_pos", c.answer_pos_dim, 3);
    turn = Tensor<S>("turn", c.turn_dim, c.n_max);
    chunk = Tensor<S>("chunk", c.chunk_dim, c.chunk_count);
    passage_fwd = LstmWeights<S>("passage_fwd", c.passage_input_dim(), h);
    passage_bwd = LstmWeights<S>("passage_bwd", c.passage_input_dim(), h);
    turn_fwd = LstmWeights<S>("turn_fwd", c.word_dim, h);
    turn_bwd = LstmWeights<S>("turn_bwd", c.word_dim, h);
    context_fwd = LstmWeights<S>("context_fwd", m, h);
    context_bwd = LstmWeights<S>("context_bwd", m, h);
    decoder = LstmWeights<S>("decoder", c.word_dim, h);
    self_match = Tensor<S>("self_match", m, m);
    fuse = Tensor<S>("fuse", m, 2 * m);
    fuse_bias = Tensor<S>("fuse_bias", m, 1);
    gate = Tensor<S>("gate", m, 2 * m);
    gate_bias = Tensor<S>("gate_bias", m, 1);
    attend_passage = Tensor<S>("attend_passage", m, h);
    attend_token = Tensor<S>("attend_token", m, h);
    attend_turn = Tensor<S>("attend_turn", m, h);
    readout = Tensor<S>("readout", h, h + m);
    vocab_proj = Tensor<S>("vocab_proj", v, h);
    vocab_bias = Tensor<S>("vocab_bias", v, 1);
    copy_gate = Tensor<S>("copy_gate", 1, m + h + c.word_dim);
    copy_bias = Tensor<S>("copy_bias", 1, 1);
    init_proj = Tensor<S>("init_proj", h, 2 * h);
    init_bias = Tensor<S>("init_bias", h, 1);
  }

  std::vector<Tensor<S>*> tensors() {
    std::vector<Tensor<S>*> out{&word, &answer_pos, &turn, &chunk};
    for (auto* l : {&passage_fwd, &passage_bwd, &turn_fwd, &turn_bwd, &context_fwd, &context_bwd, &decoder}) {
      out.push_back(&l->input);
      out.push_back(&l->recurrent);
      out.push_back(&l->bias);
    }
    for (auto* t : {&self_match, &fuse, &fuse_bias, &gate, &gate_bias, &attend_passage, &attend_token, &attend_turn,
                    &readout, &vocab_proj, &vocab_bias, &copy_gate, &copy_bias, &init_proj, &init_bias})
      out.push_back(t);
    return out;
  }

  std::vector<const Tensor<S>*> tensors() const {
    auto all = const_cast<Parameters*>(this)->tensors();
    return {all.begin(), all.end()};
  }

  void zero_grad() {
    for (auto* t : tensors()) t->zero_grad();
  }

  /// Uniform(-scale, scale) everywhere, LSTM forget-gate biases at 1.
  void initialize(std::uint64_t seed, S scale = S(0.1)) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-static_cast<double>(scale), static_cast<double>(scale));
    for (auto* t : tensors()) {
      for (Eigen::Index k = 0; k < t->value.size(); ++k) t->value(k) = static_cast<S>(u(rng));
      t->zero_grad();
    }
    for (auto* l : {&passage_fwd, &passage_bwd, &turn_fwd, &turn_bwd, &context_fwd, &context_bwd, &decoder}) {
      const int h = l->hidden();
      l->bias.value.setZero();
      l->bias.value.middleRows(h, h).setOnes();
    }
  }

  bool finite() const {
    for (const auto* t : tensors())
      if (!t->value.allFinite()) return false;
    return true;
  }
};

struct DecoderState {
  Var h;
  Var c;
};

/// Encoder results living in one graph.
struct EncoderState {
  Var passage;        // gated passage states, 2H x m
  Var raw_passage;    // bi-LSTM passage states before gating
  Var self_weights;   // m x m, column j is a^p_j
  Var turn_tokens;    // 2H x N flattened history token states (invalid if no history)
  Var turn_context;   // 2H x K context-level states (invalid if no history)
  std::vector<Var> turn_token_states;  // per history turn, 2H x len_k
  Var memory;         // [passage, turn_tokens]
  std::vector<int> turn_of_token;
  int passage_length = 0;
  int history_length = 0;
  DecoderState initial;
};

/// One decoding step. `attention` covers the unified memory; alpha and beta
/// are its passage and history slices.
struct StepOutput {
  DecoderState state;
  Var scores;  // unified attention logits, passage rows then history rows
  Var attention;
  Var alpha;
  Var beta;  // invalid when history is empty
  Var context;
  Var vocab_dist;
  Var p_gen;
  Var final_dist;
};

template <typename S>
class CfNet {
 public:
  CfNet() = default;
  explicit CfNet(ModelConfig config) : config_(std::move(config)), params_(config_) {
    config_.validate();
    params_.initialize(config_.seed);
  }
  CfNet(ModelConfig config, Parameters<S> params) : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
  }

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  Parameters<S>& params() { return params_; }
  const Parameters<S>& params() const { return params_; }

  int turn_slot(int turn_number) const { return std::clamp(turn_number, 1, config_.n_max); }

  /// Passage input vectors x_j = [w_j; a_j; t_i; c_j], one column per token.
  Var embed_passage(Graph<S>& g, const EncodedExample& ex) {
    const int m = ex.passage_length();
    const Var words = g.lookup(params_.word, ex.passage_ids);
    const Var answers = g.lookup(params_.answer_pos, ex.bio_ids);
    const std::vector<int> turn_ids(static_cast<std::size_t>(m), turn_slot(ex.turn_number) - 1);
    const Var turns = g.lookup(params_.turn, turn_ids);
    std::vector<int> chunk_ids(ex.chunk_ids);
    for (int& c : chunk_ids) c = std::clamp(c, 0, config_.chunk_count - 1);
    const Var chunks = g.lookup(params_.chunk, chunk_ids);
    return g.concat_rows({words, answers, turns, chunks});
  }

  /// LSTM over the columns of `inputs`; states returned in input order.
  std::vector<Var> run_lstm(Graph<S>& g, LstmWeights<S>& w, Var inputs, bool reverse) {
    const int n = static_cast<int>(g.value(inputs).cols());
    const int h = w.hidden();
    const Var projected = g.add_bias(g.matmul(g.param(w.input), inputs), g.param(w.bias));
    const Var recurrent = g.param(w.recurrent);
    Var hs = g.constant(Matrix<S>::Zero(h, 1));
    Var cs = hs;
    std::vector<Var> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const int t = reverse ? n - 1 - k : k;
      const Var gates = g.add(g.cols(projected, t, 1), g.matmul(recurrent, hs));
      const Var hc = g.lstm_cell(gates, cs);
      hs = g.rows(hc, 0, h);
      cs = g.rows(hc, h, h);
      out[static_cast<std::size_t>(t)] = hs;
    }
    return out;
  }

  struct BiStates {
    Var states;    // 2H x n
    Var summary;   // [last forward; first backward], 2H x 1
  };

  BiStates run_bilstm(Graph<S>& g, LstmWeights<S>& fwd, LstmWeights<S>& bwd, Var inputs) {
    const auto f = run_lstm(g, fwd, inputs, false);
    const auto b = run_lstm(g, bwd, inputs, true);
    const Var states = g.concat_rows({g.concat_cols(f), g.concat_cols(b)});
    return {states, g.concat_rows({f.back(), b.front()})};
  }

  /// Gated self-matching over passage states H (2H x m):
  /// a_j = softmax(H^T W_s h_j), u_j = H a_j,
  /// f_j = tanh(W_f [h_j; u_j]), g_j = sigmoid(W_g [h_j; u_j]),
  /// out_j = g_j * f_j + (1 - g_j) * h_j.
  std::pair<Var, Var> self_gate(Graph<S>& g, Var states) {
    const Var scores = g.transpose_matmul(states, g.matmul(g.param(params_.self_match), states));
    const Var weights = g.softmax_cols(scores);
    const Var matched = g.matmul(states, weights);
    const Var joined = g.concat_rows({states, matched});
    const Var fused = g.tanh(g.add_bias(g.matmul(g.param(params_.fuse), joined), g.param(params_.fuse_bias)));
    const Var gate = g.sigmoid(g.add_bias(g.matmul(g.param(params_.gate), joined), g.param(params_.gate_bias)));
    const Var out = g.add(g.cwise_mul(gate, fused), g.cwise_mul(g.one_minus(gate), states));
    return {out, weights};
  }

  EncoderState encode(Graph<S>& g, const EncodedExample& ex) {
    if (ex.passage_ids.empty()) throw std::invalid_argument("encode: empty passage");
    const S drop = static_cast<S>(config_.dropout);
    EncoderState enc;
    enc.passage_length = ex.passage_length();

    const Var x = g.dropout(embed_passage(g, ex), drop);
    const BiStates passage = run_bilstm(g, params_.passage_fwd, params_.passage_bwd, x);
    enc.raw_passage = g.dropout(passage.states, drop);
    std::tie(enc.passage, enc.self_weights) = self_gate(g, enc.raw_passage);

    std::vector<Var> summaries;
    for (std::size_t k = 0; k < ex.history_ids.size(); ++k) {
      const auto& ids = ex.history_ids[k];
      if (ids.empty()) throw std::invalid_argument("encode: empty history turn");
      const Var emb = g.dropout(g.lookup(params_.word, ids), drop);
      const BiStates turn = run_bilstm(g, params_.turn_fwd, params_.turn_bwd, emb);
      enc.turn_token_states.push_back(g.dropout(turn.states, drop));
      summaries.push_back(turn.summary);
      enc.turn_of_token.insert(enc.turn_of_token.end(), ids.size(), static_cast<int>(k));
    }
    enc.history_length = static_cast<int>(enc.turn_of_token.size());
    if (!summaries.empty()) {
      enc.turn_tokens = g.concat_cols(enc.turn_token_states);
      enc.turn_context = run_bilstm(g, params_.context_fwd, params_.context_bwd, g.concat_cols(summaries)).states;
      enc.memory = g.concat_cols({enc.passage, enc.turn_tokens});
    } else {
      enc.memory = enc.passage;
    }

    const Var h0 = g.tanh(g.add_bias(g.matmul(g.param(params_.init_proj), passage.summary), g.param(params_.init_bias)));
    enc.initial = {h0, g.constant(Matrix<S>::Zero(config_.hidden_dim, 1))};
    return enc;
  }

  /// Scores e^p_j = h~p_j^T W_p h, e^w = h^w^T W_w h, e^c = h^c^T W_c h are
  /// exponentiated and normalised jointly: alpha_j ~ exp(e^p_j),
  /// beta_{k,j} ~ exp(e^w_{k,j}) * exp(e^c_k).
  Var unified_scores(Graph<S>& g, const EncoderState& enc, Var h) {
    const Var passage_scores = g.transpose_matmul(enc.passage, g.matmul(g.param(params_.attend_passage), h));
    if (enc.history_length == 0) return passage_scores;
    const Var token_scores = g.transpose_matmul(enc.turn_tokens, g.matmul(g.param(params_.attend_token), h));
    const Var turn_scores = g.transpose_matmul(enc.turn_context, g.matmul(g.param(params_.attend_turn), h));
    const Var history_scores = g.add(token_scores, g.gather_rows(turn_scores, enc.turn_of_token));
    return g.concat_rows({passage_scores, history_scores});
  }

  Var unified_attention(Graph<S>& g, const EncoderState& enc, Var h) {
    return g.softmax_cols(unified_scores(g, enc, h));
  }

  StepOutput decode_step(Graph<S>& g, const EncoderState& enc, const EncodedExample& ex, int prev_token,
                         const DecoderState& state) {
    const int h = config_.hidden_dim;
    const int input_id = prev_token < config_.vocab_size ? prev_token : corpus::Vocabulary::kUnk;
    const Var x = g.dropout(g.lookup(params_.word, std::span<const int>(&input_id, 1)), static_cast<S>(config_.dropout));

    auto& dec = params_.decoder;
    const Var gates = g.add(g.add_bias(g.matmul(g.param(dec.input), x), g.param(dec.bias)),
                            g.matmul(g.param(dec.recurrent), state.h));
    const Var hc = g.lstm_cell(gates, state.c);
    StepOutput out;
    out.state = {g.rows(hc, 0, h), g.rows(hc, h, h)};

    out.scores = unified_scores(g, enc, out.state.h);
    out.attention = g.softmax_cols(out.scores);
    out.alpha = g.rows(out.attention, 0, enc.passage_length);
    if (enc.history_length > 0) out.beta = g.rows(out.attention, enc.passage_length, enc.history_length);
    out.context = g.matmul(enc.memory, out.attention);

    const Var read = g.tanh(g.matmul(g.param(params_.readout), g.concat_rows({out.state.h, out.context})));
    out.vocab_dist = g.softmax_cols(g.add(g.matmul(g.param(params_.vocab_proj), read), g.param(params_.vocab_bias)));
    out.p_gen = g.sigmoid(
        g.add(g.matmul(g.param(params_.copy_gate), g.concat_rows({out.context, out.state.h, x})), g.param(params_.copy_bias)));

    const Eigen::Index ext = ex.extended_size();
    const Var generated = g.scale_by(g.pad_rows(out.vocab_dist, ext), out.p_gen);
    const Var copied = g.scale_by(g.scatter_add(out.attention, ex.source_ext_ids, ext), g.one_minus(out.p_gen));
    out.final_dist = g.add(generated, copied);
    return out;
  }

  /// Teacher-forced pass: step t reads target t-1 (BOS at t = 0).
  std::vector<StepOutput> forward(Graph<S>& g, const EncodedExample& ex, const EncoderState& enc) {
    std::vector<StepOutput> steps;
    DecoderState state = enc.initial;
    int prev = corpus::Vocabulary::kBos;
    for (int target : ex.target_ids) {
      steps.push_back(decode_step(g, enc, ex, prev, state));
      state = steps.back().state;
      prev = target;
    }
    return steps;
  }

  std::vector<StepOutput> forward(Graph<S>& g, const EncodedExample& ex) { return forward(g, ex, encode(g, ex)); }

 private:
  ModelConfig config_;
  Parameters<S> params_;
};

}  // namespace coqg::nnet
