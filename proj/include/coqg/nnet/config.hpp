#pragma once

#include "coqg/util/kv_config.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>

namespace coqg::nnet {

struct ModelConfig {
  int word_dim = 128;
  int answer_pos_dim = 16;
  int turn_dim = 16;
  int chunk_dim = 16;
  int hidden_dim = 256;
  int chunk_count = 10;  // L
  int n_max = 20;        // turn numbers clamp here
  int vocab_size = 0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double lambda4 = 0.5;
  double dropout = 0.3;
  std::uint64_t seed = 1;

  int passage_input_dim() const { return word_dim + answer_pos_dim + turn_dim + chunk_dim; }
  int memory_dim() const { return 2 * hidden_dim; }

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v < 1) throw util::ConfigError(std::string(name) + " must be >= 1");
    };
    positive(word_dim, "word_dim");
    positive(answer_pos_dim, "answer_pos_dim");
    positive(turn_dim, "turn_dim");
    positive(chunk_dim, "chunk_dim");
    positive(hidden_dim, "hidden_dim");
    positive(chunk_count, "chunk_count");
    positive(n_max, "n_max");
    if (vocab_size < 6) throw util::ConfigError("vocab_size must cover the reserved symbols");
    for (double l : {lambda1, lambda2, lambda3, lambda4})
      if (!(l >= 0.0)) throw util::ConfigError("loss weights must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw util::ConfigError("dropout must be in [0, 1)");
  }

  /// Same tensor shapes.
  bool same_architecture(const ModelConfig& o) const {
    return word_dim == o.word_dim && answer_pos_dim == o.answer_pos_dim && turn_dim == o.turn_dim &&
           chunk_dim == o.chunk_dim && hidden_dim == o.hidden_dim && chunk_count == o.chunk_count &&
           n_max == o.n_max && vocab_size == o.vocab_size;
  }

  /// Applies one key; returns false for keys this struct does not own.
  bool set(const std::string& key, const std::string& v) {
    using util::to_double;
    using util::to_int;
    if (key == "word_dim") word_dim = to_int(key, v);
    else if (key == "answer_pos_dim") answer_pos_dim = to_int(key, v);
    else if (key == "turn_dim") turn_dim = to_int(key, v);
    else if (key == "chunk_dim") chunk_dim = to_int(key, v);
    else if (key == "hidden_dim") hidden_dim = to_int(key, v);
    else if (key == "chunk_count" || key == "L") chunk_count = to_int(key, v);
    else if (key == "n_max") n_max = to_int(key, v);
    else if (key == "vocab_size") vocab_size = to_int(key, v);
    else if (key == "lambda1") lambda1 = to_double(key, v);
    else if (key == "lambda2") lambda2 = to_double(key, v);
    else if (key == "lambda3") lambda3 = to_double(key, v);
    else if (key == "lambda4") lambda4 = to_double(key, v);
    else if (key == "dropout") dropout = to_double(key, v);
    else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(v));
    else return false;
    return true;
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"word_dim", c.word_dim},     {"answer_pos_dim", c.answer_pos_dim},
       {"turn_dim", c.turn_dim},     {"chunk_dim", c.chunk_dim},
       {"hidden_dim", c.hidden_dim}, {"chunk_count", c.chunk_count},
       {"n_max", c.n_max},           {"vocab_size", c.vocab_size},
       {"lambda1", c.lambda1},       {"lambda2", c.lambda2},
       {"lambda3", c.lambda3},       {"lambda4", c.lambda4},
       {"dropout", c.dropout},       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("word_dim").get_to(c.word_dim);
  j.at("answer_pos_dim").get_to(c.answer_pos_dim);
  j.at("turn_dim").get_to(c.turn_dim);
  j.at("chunk_dim").get_to(c.chunk_dim);
  j.at("hidden_dim").get_to(c.hidden_dim);
  j.at("chunk_count").get_to(c.chunk_count);
  j.at("n_max").get_to(c.n_max);
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("lambda1").get_to(c.lambda1);
  j.at("lambda2").get_to(c.lambda2);
  j.at("lambda3").get_to(c.lambda3);
  j.at("lambda4").get_to(c.lambda4);
  j.at("dropout").get_to(c.dropout);
  j.at("seed").get_to(c.seed);
}

}  // namespace coqg::nnet
