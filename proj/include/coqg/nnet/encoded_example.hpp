#pragma once

#include "coqg/corpus/types.hpp"
#include "coqg/corpus/vocabulary.hpp"

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace coqg::nnet {

/// A ProcessedExample mapped onto vocabulary ids. Source tokens missing from
/// the vocabulary get per-example extended ids (vocab_size + k) so the copy
/// distribution can still point at them.
struct EncodedExample {
  std::string conversation_id;
  int turn_number = 1;
  int vocab_size = 0;
  std::vector<int> passage_ids;
  std::vector<int> bio_ids;
  std::vector<int> chunk_ids;
  std::vector<std::vector<int>> history_ids;
  std::vector<int> source_ext_ids;  // passage tokens, then flattened history
  std::vector<std::string> source_tokens;
  std::vector<std::string> oov_tokens;
  std::vector<int> target_ids;  // question tokens then EOS, extended ids
  std::vector<corpus::Evidence> token_evidence;
  std::optional<corpus::CorefAnnotation> coref;

  int extended_size() const { return vocab_size + static_cast<int>(oov_tokens.size()); }
  int passage_length() const { return static_cast<int>(passage_ids.size()); }
  int history_length() const { return static_cast<int>(source_ext_ids.size()) - passage_length(); }

  std::string token_text(int ext_id, const corpus::Vocabulary& vocab) const {
    if (ext_id < vocab_size) return vocab.token(ext_id);
    return oov_tokens.at(static_cast<std::size_t>(ext_id - vocab_size));
  }
};

inline EncodedExample encode_example(const corpus::ProcessedExample& ex, const corpus::Vocabulary& vocab) {
  EncodedExample out;
  out.conversation_id = ex.conversation_id;
  out.turn_number = ex.turn_number;
  out.vocab_size = vocab.size();
  out.passage_ids = vocab.ids(ex.passage_tokens);
  for (auto t : ex.bio_tags) out.bio_ids.push_back(static_cast<int>(t));
  out.chunk_ids = ex.chunk_ids;
  for (const auto& h : ex.history) out.history_ids.push_back(vocab.ids(h));
  out.token_evidence = ex.token_evidence();
  out.coref = ex.coref;

  std::unordered_map<std::string, int> oov;
  auto source = [&](const std::string& tok) {
    out.source_tokens.push_back(tok);
    if (vocab.contains(tok)) {
      out.source_ext_ids.push_back(vocab.id(tok));
      return;
    }
    auto [it, inserted] = oov.emplace(tok, vocab.size() + static_cast<int>(out.oov_tokens.size()));
    if (inserted) out.oov_tokens.push_back(tok);
    out.source_ext_ids.push_back(it->second);
  };
  for (const auto& t : ex.passage_tokens) source(t);
  for (const auto& h : ex.history)
    for (const auto& t : h) source(t);

  for (const auto& t : ex.target_question) {
    if (vocab.contains(t)) out.target_ids.push_back(vocab.id(t));
    else if (auto it = oov.find(t); it != oov.end()) out.target_ids.push_back(it->second);
    else out.target_ids.push_back(corpus::Vocabulary::kUnk);
  }
  out.target_ids.push_back(corpus::Vocabulary::kEos);
  return out;
}

}  // namespace coqg::nnet
