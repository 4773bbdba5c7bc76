#pragma once

#include "coqg/corpus/coreference.hpp"
#include "coqg/corpus/examples_builder.hpp"
#include "coqg/corpus/vocabulary.hpp"
#include "coqg/nnet/config.hpp"
#include "coqg/nnet/encoded_example.hpp"

#include "synthetic_coqa.hpp"

#include <random>
#include <vector>

namespace coqg::testkit {

struct EncodedCorpus {
  std::vector<corpus::ProcessedExample> examples;
  corpus::Vocabulary vocab;
  std::vector<nnet::EncodedExample> encoded;
};

/// Synthetic conversations run through the corpus pipeline, heuristic
/// coreference on, vocabulary built from all examples.
inline EncodedCorpus synthetic_examples(int conversations, std::uint64_t seed, int min_freq = 1,
                                        const SyntheticOptions& opt = {}) {
  EncodedCorpus out;
  corpus::CorefStats stats;
  const corpus::HeuristicCorefProvider provider;
  for (const auto& conv : synthetic_corpus(conversations, seed, opt)) {
    for (auto& ex : corpus::build_examples(conv)) {
      ex.coref = corpus::annotate_coreference(ex, conv, provider, stats);
      out.examples.push_back(std::move(ex));
    }
  }
  out.vocab = corpus::Vocabulary::build(out.examples, min_freq);
  for (const auto& ex : out.examples) out.encoded.push_back(nnet::encode_example(ex, out.vocab));
  return out;
}

inline nnet::ModelConfig micro_config(int vocab_size, int hidden = 8, std::uint64_t seed = 1) {
  nnet::ModelConfig c;
  c.word_dim = 6;
  c.answer_pos_dim = 2;
  c.turn_dim = 2;
  c.chunk_dim = 2;
  c.hidden_dim = hidden;
  c.chunk_count = 4;
  c.n_max = 5;
  c.vocab_size = vocab_size;
  c.dropout = 0.0;
  c.seed = seed;
  return c;
}

struct RandomExampleOptions {
  int vocab_size = 20;
  int max_passage = 9;
  int max_history_turns = 3;
  int max_turn_length = 5;
  int max_target = 5;
  int oov = 2;  // extended ids beyond the vocabulary
  int chunk_count = 4;
  bool allow_empty_history = true;
};

/// An encoded example with random ids, at least one CES token and, when a
/// history exists, a coreference annotation.
inline nnet::EncodedExample random_example(std::mt19937_64& rng, const RandomExampleOptions& o = {}) {
  auto uniform = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  const int v = o.vocab_size;
  nnet::EncodedExample ex;
  ex.conversation_id = "random";
  ex.vocab_size = v;
  ex.turn_number = uniform(1, 30);
  for (int k = 0; k < o.oov; ++k) ex.oov_tokens.push_back("oov" + std::to_string(k));

  const int m = uniform(1, o.max_passage);
  auto source_id = [&] { return uniform(corpus::Vocabulary::kReserved, v - 1 + o.oov); };
  for (int j = 0; j < m; ++j) {
    const int ext = source_id();
    ex.source_ext_ids.push_back(ext);
    ex.passage_ids.push_back(ext < v ? ext : corpus::Vocabulary::kUnk);
  }
  const int a0 = uniform(0, m - 1), a1 = uniform(a0, m - 1);
  for (int j = 0; j < m; ++j) ex.bio_ids.push_back(j == a0 ? 0 : (j > a0 && j <= a1 ? 1 : 2));
  ex.chunk_ids = corpus::assign_chunks(m, o.chunk_count);
  for (int j = 0; j < m; ++j) {
    const int r = uniform(0, 2);
    ex.token_evidence.push_back(r == 0 ? corpus::Evidence::NONE : (r == 1 ? corpus::Evidence::CES : corpus::Evidence::HES));
  }
  ex.token_evidence[static_cast<std::size_t>(uniform(0, m - 1))] = corpus::Evidence::CES;

  const int turns = uniform(o.allow_empty_history ? 0 : 1, o.max_history_turns);
  for (int k = 0; k < turns; ++k) {
    std::vector<int> ids;
    const int len = uniform(1, o.max_turn_length);
    for (int j = 0; j < len; ++j) {
      const int ext = source_id();
      ex.source_ext_ids.push_back(ext);
      ids.push_back(ext < v ? ext : corpus::Vocabulary::kUnk);
    }
    ex.history_ids.push_back(std::move(ids));
  }
  for (const int id : ex.source_ext_ids) ex.source_tokens.push_back("t" + std::to_string(id));

  const int t = uniform(1, o.max_target);
  for (int k = 0; k < t; ++k) ex.target_ids.push_back(uniform(corpus::Vocabulary::kReserved, v - 1 + o.oov));
  ex.target_ids.push_back(corpus::Vocabulary::kEos);

  if (turns > 0) {
    corpus::CorefAnnotation c;
    const int h = ex.history_length();
    const int first = uniform(0, h - 1), last = uniform(first, std::min(h - 1, first + 2));
    for (int k = first; k <= last; ++k) c.mention_positions.push_back(k);
    c.pronoun = uniform(0, t - 1);
    c.confidence = 0.25 + 0.75 * static_cast<double>(uniform(0, 100)) / 100.0;
    ex.coref = c;
  }
  return ex;
}

}  // namespace coqg::testkit
