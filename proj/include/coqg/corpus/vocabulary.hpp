#pragma once

#include "coqg/corpus/types.hpp"
#include "coqg/util/atomic_file.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace coqg::corpus {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kQuestion = 4;
  static constexpr int kAnswer = 5;
  static constexpr int kReserved = 6;

  Vocabulary() {
    for (const char* s : {"<pad>", "<unk>", "<s>", "</s>"}) add(s);
    add(kQuestionMarker);
    add(kAnswerMarker);
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  int min_frequency() const { return min_frequency_; }

  int id(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& tok) const { return index_.count(tok) != 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> ids(std::span<const std::string> toks) const {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(id(t));
    return out;
  }

  /// FNV-1a over the tokens in index order; stable across platforms.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& t : tokens_) {
      for (unsigned char c : t) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      h ^= 0xffU;
      h *= 1099511628211ULL;
    }
    return h;
  }

  /// Counts lowercased tokens of passages, history and target questions;
  /// keeps those seen at least `min_freq` times, most frequent first.
  static Vocabulary build(std::span<const ProcessedExample> examples, int min_freq) {
    std::unordered_map<std::string, long> counts;
    // Each conversation contributes its passage once.
    std::set<std::string> seen_passage;
    for (const auto& ex : examples) {
      if (ex.conversation_id.empty() || seen_passage.insert(ex.conversation_id).second)
        for (const auto& t : ex.passage_tokens) ++counts[t];
      for (const auto& h : ex.history)
        for (const auto& t : h) ++counts[t];
      for (const auto& t : ex.target_question) ++counts[t];
    }
    std::vector<std::pair<std::string, long>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
    Vocabulary v;
    v.min_frequency_ = min_freq;
    for (const auto& [tok, n] : sorted)
      if (n >= min_freq && !v.contains(tok)) v.add(tok);
    return v;
  }

  static Vocabulary from_tokens(const std::vector<std::string>& toks, int min_freq = 1) {
    Vocabulary v;
    v.min_frequency_ = min_freq;
    for (std::size_t k = 0; k < toks.size(); ++k) {
      if (k < kReserved) {
        if (toks[k] != v.tokens_[k]) throw CorpusError("vocabulary file: reserved symbol mismatch at line " + std::to_string(k + 1));
        continue;
      }
      if (v.contains(toks[k])) throw CorpusError("vocabulary file: duplicate token '" + toks[k] + "'");
      v.add(toks[k]);
    }
    return v;
  }

  void save(const std::string& path) const {
    std::string text;
    for (const auto& t : tokens_) text += t + '\n';
    util::atomic_write(path, text);
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open vocabulary " + path);
    std::vector<std::string> toks;
    std::string line;
    while (std::getline(in, line)) toks.push_back(line);
    return from_tokens(toks);
  }

 private:
  void add(const std::string& tok) {
    index_.emplace(tok, static_cast<int>(tokens_.size()));
    tokens_.push_back(tok);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int min_frequency_ = 1;
};

}  // namespace coqg::corpus
