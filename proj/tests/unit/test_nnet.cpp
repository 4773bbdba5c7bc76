#include "coqg/nnet/checkpoint.hpp"
#include "coqg/nnet/graph.hpp"
#include "coqg/nnet/model.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace coqg;
using nnet::Graph;
using nnet::Matrix;
using nnet::Tensor;
using nnet::Var;

namespace {

using Fn = std::function<Var(Graph<double>&, Var)>;

// Central differences of sum(w .* f(x)) against the tape gradient.
double op_gradient_error(const Fn& f, Matrix<double> x0, std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<double> x("x", x0.rows(), x0.cols());
  x.value = x0;
  Matrix<double> w;
  auto run = [&](bool grad) {
    Graph<double> g;
    const Var out = f(g, g.param(x));
    if (w.size() == 0) w = Matrix<double>::NullaryExpr(g.value(out).rows(), g.value(out).cols(), [&] { return u(rng); });
    const Var loss = g.sum(g.cwise_mul(out, g.constant(w)));
    if (grad) g.backward(loss);
    return g.scalar(loss);
  };
  x.zero_grad();
  run(true);
  const Matrix<double> analytic = x.grad;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < x0.size(); ++k) {
    const double h = 1e-6;
    x.value = x0;
    x.value(k) += h;
    const double up = run(false);
    x.value = x0;
    x.value(k) -= h;
    const double down = run(false);
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic(k)) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Matrix<double>::NullaryExpr(r, c, [&] { return u(rng); });
}

nnet::CfNet<double> micro_model(int vocab = 20, std::uint64_t seed = 1) {
  return nnet::CfNet<double>(testkit::micro_config(vocab, 8, seed));
}

}  // namespace

TEST(Graph, OpGradients) {
  const auto m = random_matrix(3, 4, 1);
  const auto sq = random_matrix(4, 3, 2);
  const std::vector<int> idx{2, 0, 2};
  const std::vector<std::pair<const char*, Fn>> ops{
      {"matmul", [&](Graph<double>& g, Var x) { return g.matmul(x, g.constant(sq)); }},
      {"transpose_matmul", [&](Graph<double>& g, Var x) { return g.transpose_matmul(x, x); }},
      {"tanh", [](Graph<double>& g, Var x) { return g.tanh(x); }},
      {"sigmoid", [](Graph<double>& g, Var x) { return g.sigmoid(x); }},
      {"softmax", [](Graph<double>& g, Var x) { return g.softmax_cols(x); }},
      {"log", [](Graph<double>& g, Var x) { return g.log(g.sigmoid(x)); }},
      {"mean_cols", [](Graph<double>& g, Var x) { return g.mean_cols(x); }},
      {"gather", [&](Graph<double>& g, Var x) { return g.gather_rows(g.cols(x, 3, 1), idx); }},
      {"sum_rows", [&](Graph<double>& g, Var x) { return g.sum_rows(g.cols(x, 1, 1), idx); }},
      {"divide", [](Graph<double>& g, Var x) { return g.divide(g.element(x, 0, 0), g.sum(g.sigmoid(x))); }},
      {"scatter", [&](Graph<double>& g, Var x) { return g.scatter_add(g.cols(x, 0, 1), idx, 5); }},
      {"scale_by", [](Graph<double>& g, Var x) { return g.scale_by(x, g.element(x, 1, 1)); }},
      {"concat", [](Graph<double>& g, Var x) { return g.concat_rows({x, g.tanh(x)}); }},
      {"add_bias", [](Graph<double>& g, Var x) { return g.add_bias(x, g.cols(x, 2, 1)); }},
      {"one_minus", [](Graph<double>& g, Var x) { return g.cwise_mul(g.one_minus(x), x); }},
  };
  for (const auto& [name, f] : ops) EXPECT_LT(op_gradient_error(f, m), 1e-7) << name;

  // lstm_cell wants 4H gates and an H-row cell.
  const auto gates = random_matrix(8, 1, 5);
  const auto c0 = random_matrix(2, 1, 6);
  EXPECT_LT(op_gradient_error([&](Graph<double>& g, Var x) { return g.lstm_cell(x, g.constant(c0)); }, gates), 1e-7);
  EXPECT_LT(op_gradient_error([&](Graph<double>& g, Var x) { return g.lstm_cell(g.constant(gates), x); }, c0), 1e-7);
}

TEST(Graph, DivideByTinyDenominatorStaysFinite) {
  Graph<float> g(false);
  Tensor<float> a("a", 1, 1), b("b", 1, 1);
  a.value(0, 0) = 1e-25f;
  b.value(0, 0) = 1e-24f;
  g.backward(g.divide(g.param(a), g.param(b)));
  EXPECT_TRUE(std::isfinite(a.grad(0, 0)));
  EXPECT_TRUE(std::isfinite(b.grad(0, 0)));
  EXPECT_NEAR(b.grad(0, 0) * 1e-24f, -0.1f, 1e-6f);
}

TEST(Graph, DropoutIsIdentityAtEvaluation) {
  Graph<double> g(false);
  const auto m = random_matrix(4, 4, 1);
  EXPECT_EQ(g.value(g.dropout(g.constant(m), 0.5)), m);
}

TEST(Embedding, WidthClampAndSharedChunks) {
  auto c = testkit::micro_config(20);
  c.word_dim = 8;
  c.n_max = 20;
  nnet::CfNet<double> model(c);
  std::mt19937_64 rng(1);
  auto ex = testkit::random_example(rng);
  ex.turn_number = 50;
  Graph<double> g;
  const auto& x = g.value(model.embed_passage(g, ex));
  EXPECT_EQ(x.rows(), 14);
  EXPECT_EQ(x.cols(), ex.passage_length());
  EXPECT_EQ(model.turn_slot(50), 20);
  EXPECT_EQ(model.turn_slot(0), 1);
  const Matrix<double> turn_col = model.params().turn.value.col(19);
  for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_EQ(Matrix<double>(x.block(10, j, 2, 1)), turn_col);
  for (int j = 1; j < ex.passage_length(); ++j) {
    if (ex.chunk_ids[static_cast<std::size_t>(j)] == ex.chunk_ids[static_cast<std::size_t>(j - 1)]) {
      EXPECT_EQ(Matrix<double>(x.block(12, j, 2, 1)), Matrix<double>(x.block(12, j - 1, 2, 1)));
    }
  }
}

TEST(SelfGate, SingleTokenAttendsToItself) {
  auto model = micro_model();
  Graph<double> g;
  const auto h = random_matrix(16, 1, 4);
  const auto [out, weights] = model.self_gate(g, g.constant(h));
  EXPECT_NEAR(g.value(weights)(0, 0), 1.0, 1e-12);
  (void)out;
}

TEST(SelfGate, ColumnsSumToOneAndClosedGateIsIdentity) {
  auto model = micro_model();
  const auto h = random_matrix(16, 5, 4);
  {
    Graph<double> g;
    const auto [out, weights] = model.self_gate(g, g.constant(h));
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(g.value(weights).col(j).sum(), 1.0, 1e-6);
    EXPECT_GT((g.value(out) - h).cwiseAbs().maxCoeff(), 1e-3);
  }
  model.params().gate_bias.value.setConstant(-1e9);
  Graph<double> g;
  const auto [out, weights] = model.self_gate(g, g.constant(h));
  EXPECT_LT((g.value(out) - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ConversationEncoder, ShapesAndOrderSensitivity) {
  auto model = micro_model();
  std::mt19937_64 rng(2);
  auto ex = testkit::random_example(rng);
  ex.history_ids = {{6, 7, 8, 9}, {10, 11, 12, 13, 14, 15}};
  ex.source_ext_ids.resize(static_cast<std::size_t>(ex.passage_length()));
  for (const auto& h : ex.history_ids) ex.source_ext_ids.insert(ex.source_ext_ids.end(), h.begin(), h.end());
  ex.coref.reset();
  Graph<double> g;
  const auto enc = model.encode(g, ex);
  ASSERT_EQ(enc.turn_token_states.size(), 2u);
  EXPECT_EQ(g.value(enc.turn_token_states[0]).cols(), 4);
  EXPECT_EQ(g.value(enc.turn_token_states[1]).cols(), 6);
  EXPECT_EQ(g.value(enc.turn_context).cols(), 2);
  EXPECT_EQ(enc.history_length, 10);

  auto swapped = ex;
  std::swap(swapped.history_ids[0], swapped.history_ids[1]);
  Graph<double> g2;
  const auto enc2 = model.encode(g2, swapped);
  EXPECT_GT((g.value(enc.turn_context).col(1) - g2.value(enc2.turn_context).col(0)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ConversationEncoder, EmptyHistory) {
  auto model = micro_model();
  std::mt19937_64 rng(3);
  testkit::RandomExampleOptions o;
  o.max_history_turns = 0;
  const auto ex = testkit::random_example(rng, o);
  Graph<double> g;
  const auto steps = model.forward(g, ex);
  for (const auto& s : steps) {
    EXPECT_FALSE(s.beta.valid());
    EXPECT_NEAR(g.value(s.alpha).sum(), 1.0, 1e-12);
  }
}

TEST(UnifiedAttention, MatchesScalarOracle) {
  auto model = micro_model();
  std::mt19937_64 rng(4);
  testkit::RandomExampleOptions o;
  o.allow_empty_history = false;
  for (int trial = 0; trial < 20; ++trial) {
    const auto ex = testkit::random_example(rng, o);
    Graph<double> g;
    const auto enc = model.encode(g, ex);
    const auto h = random_matrix(8, 1, static_cast<std::uint64_t>(trial));
    const auto& attn = g.value(model.unified_attention(g, enc, g.constant(h)));
    const auto& p = model.params();
    const Matrix<double> hp = g.value(enc.passage), hw = g.value(enc.turn_tokens), hc = g.value(enc.turn_context);
    std::vector<double> e;
    for (Eigen::Index j = 0; j < hp.cols(); ++j) e.push_back(std::exp((hp.col(j).transpose() * p.attend_passage.value * h)(0, 0)));
    for (Eigen::Index j = 0; j < hw.cols(); ++j) {
      const int k = enc.turn_of_token[static_cast<std::size_t>(j)];
      const double ew = std::exp((hw.col(j).transpose() * p.attend_token.value * h)(0, 0));
      const double ec = std::exp((hc.col(k).transpose() * p.attend_turn.value * h)(0, 0));
      e.push_back(ew * ec);
    }
    double total = 0.0;
    for (double v : e) total += v;
    ASSERT_EQ(static_cast<std::size_t>(attn.rows()), e.size());
    for (std::size_t j = 0; j < e.size(); ++j) EXPECT_NEAR(attn(static_cast<Eigen::Index>(j), 0), e[j] / total, 1e-12);
  }
}

TEST(UnifiedAttention, EqualScoresGiveEqualWeights) {
  auto model = micro_model();
  model.params().attend_passage.value.setZero();
  model.params().attend_token.value.setZero();
  model.params().attend_turn.value.setZero();
  std::mt19937_64 rng(5);
  auto ex = testkit::random_example(rng);
  ex.passage_ids = {6, 7};
  ex.bio_ids = {0, 2};
  ex.chunk_ids = {0, 2};
  ex.token_evidence = {corpus::Evidence::CES, corpus::Evidence::NONE};
  ex.history_ids = {{8, 9}};
  ex.source_ext_ids = {6, 7, 8, 9};
  ex.source_tokens = {"a", "b", "c", "d"};
  ex.coref.reset();
  Graph<double> g;
  const auto steps = model.forward(g, ex);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(g.value(steps[0].attention)(j, 0), 0.25, 1e-12);
}

TEST(DecodeStep, CopyGateLimits) {
  auto model = micro_model();
  std::mt19937_64 rng(6);
  testkit::RandomExampleOptions o;
  o.max_history_turns = 0;
  auto ex = testkit::random_example(rng, o);
  ex.passage_ids = {7};
  ex.bio_ids = {0};
  ex.chunk_ids = {0};
  ex.token_evidence = {corpus::Evidence::CES};
  ex.source_ext_ids = {21};  // an extended id
  ex.source_tokens = {"oov1"};

  model.params().copy_bias.value(0, 0) = 1e9;
  {
    Graph<double> g;
    const auto steps = model.forward(g, ex);
    const auto& fin = g.value(steps[0].final_dist);
    const auto& pv = g.value(steps[0].vocab_dist);
    EXPECT_NEAR(g.scalar(steps[0].p_gen), 1.0, 1e-12);
    for (Eigen::Index k = 0; k < pv.rows(); ++k) EXPECT_NEAR(fin(k, 0), pv(k, 0), 1e-12);
    EXPECT_NEAR(fin(21, 0), 0.0, 1e-12);
  }
  model.params().copy_bias.value(0, 0) = -1e9;
  Graph<double> g;
  const auto steps = model.forward(g, ex);
  const auto& fin = g.value(steps[0].final_dist);
  EXPECT_EQ(fin.rows(), ex.extended_size());
  EXPECT_NEAR(fin(21, 0), 1.0, 1e-12);
  EXPECT_NEAR(fin.sum(), 1.0, 1e-12);
}

TEST(Forward, ShapesAndNormalization) {
  auto model = micro_model();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ex = testkit::random_example(rng);
    Graph<double> g;
    const auto steps = model.forward(g, ex);
    ASSERT_EQ(steps.size(), ex.target_ids.size());
    for (const auto& s : steps) {
      double total = g.value(s.alpha).sum();
      if (s.beta.valid()) total += g.value(s.beta).sum();
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_NEAR(g.value(s.final_dist).sum(), 1.0, 1e-12);
      EXPECT_GE(g.value(s.final_dist).minCoeff(), 0.0);
      const double pg = g.scalar(s.p_gen);
      EXPECT_TRUE(pg >= 0.0 && pg <= 1.0);
    }
  }
}

TEST(Forward, DeterministicUnderSeed) {
  std::mt19937_64 rng(8);
  const auto ex = testkit::random_example(rng);
  auto a = micro_model(20, 42), b = micro_model(20, 42), c = micro_model(20, 43);
  Graph<double> ga, gb, gc;
  const auto sa = a.forward(ga, ex), sb = b.forward(gb, ex), sc = c.forward(gc, ex);
  for (std::size_t t = 0; t < sa.size(); ++t) EXPECT_EQ(ga.value(sa[t].final_dist), gb.value(sb[t].final_dist));
  EXPECT_NE(ga.value(sa[0].final_dist), gc.value(sc[0].final_dist));
}

TEST(Checkpoint, RoundTripAndRefusal) {
  const auto reserved = corpus::Vocabulary::build({}, 1);
  std::vector<std::string> toks;
  for (int k = 0; k < reserved.size(); ++k) toks.push_back(reserved.token(k));
  for (int k = 0; k < 14; ++k) toks.push_back("w" + std::to_string(k));
  const auto vocab = corpus::Vocabulary::from_tokens(toks);
  ASSERT_EQ(vocab.size(), 20);
  const auto model = micro_model(vocab.size(), 9);
  const auto blob = nnet::serialize_checkpoint(model, vocab);
  const auto back = nnet::deserialize_checkpoint<double>(blob, vocab);
  const auto a = model.params().tensors(), b = back.params().tensors();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k]->value, b[k]->value) << a[k]->name;

  auto other_toks = toks;
  other_toks.back() = "different";
  EXPECT_THROW(nnet::deserialize_checkpoint<double>(blob, corpus::Vocabulary::from_tokens(other_toks)),
               nnet::CheckpointError);
  auto bigger = model.config();
  bigger.hidden_dim = 16;
  EXPECT_THROW(nnet::deserialize_checkpoint<double>(blob, vocab, bigger), nnet::CheckpointError);
  EXPECT_THROW(nnet::deserialize_checkpoint<double>(blob.substr(0, blob.size() - 3), vocab), nnet::CheckpointError);
}

TEST(Config, Validation) {
  auto c = testkit::micro_config(20);
  EXPECT_NO_THROW(c.validate());
  c.hidden_dim = 0;
  EXPECT_THROW(c.validate(), util::ConfigError);
  c = testkit::micro_config(20);
  c.lambda3 = -1;
  EXPECT_THROW(c.validate(), util::ConfigError);
  c = testkit::micro_config(20);
  EXPECT_TRUE(c.set("L", "7"));
  EXPECT_EQ(c.chunk_count, 7);
  EXPECT_FALSE(c.set("learning_rate", "1"));
  EXPECT_THROW(c.set("hidden_dim", "abc"), util::ConfigError);
}
