#pragma once

#include "coqg/corpus/coqa_reader.hpp"
#include "coqg/corpus/coreference.hpp"
#include "coqg/corpus/example_io.hpp"
#include "coqg/corpus/examples_builder.hpp"
#include "coqg/corpus/split.hpp"
#include "coqg/corpus/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coqg::corpus {

struct PreprocessOptions {
  BuildOptions build;
  int min_freq = 3;
  std::uint64_t seed = 1;
};

struct PreprocessReport {
  std::size_t conversations = 0;
  std::size_t total_turns = 0;
  std::size_t filtered_turns = 0;
  std::size_t examples = 0;
  std::size_t weakly_aligned = 0;
  double mean_span_f1 = 0.0;
  std::size_t coref_annotated = 0;
  std::size_t coref_dropped = 0;
  std::size_t split_conversations[3] = {0, 0, 0};
  std::size_t split_examples[3] = {0, 0, 0};
  int vocab_size = 0;

  double filtered_percent() const {
    return total_turns == 0 ? 0.0 : 100.0 * static_cast<double>(filtered_turns) / static_cast<double>(total_turns);
  }
  double coref_coverage() const {
    return examples == 0 ? 0.0 : static_cast<double>(coref_annotated) / static_cast<double>(examples);
  }
};

inline nlohmann::json to_json(const PreprocessReport& r) {
  return {{"conversations", r.conversations},
          {"total_turns", r.total_turns},
          {"filtered_turns", r.filtered_turns},
          {"filtered_percent", r.filtered_percent()},
          {"examples", r.examples},
          {"weakly_aligned", r.weakly_aligned},
          {"mean_span_f1", r.mean_span_f1},
          {"coref_annotated", r.coref_annotated},
          {"coref_dropped", r.coref_dropped},
          {"coref_coverage", r.coref_coverage()},
          {"split_conversations", {{"train", r.split_conversations[0]}, {"validation", r.split_conversations[1]}, {"test", r.split_conversations[2]}}},
          {"split_examples", {{"train", r.split_examples[0]}, {"validation", r.split_examples[1]}, {"test", r.split_examples[2]}}},
          {"vocab_size", r.vocab_size}};
}

struct PreprocessedData {
  DatasetSplit<ProcessedExample> examples;
  Vocabulary vocabulary;
  PreprocessReport report;
};

/// Builds and annotates examples per conversation, splits at conversation
/// level and builds the vocabulary from the training split.
inline std::vector<ProcessedExample> build_annotated(const RawConversation& conv, const BuildOptions& opt,
                                                     const CorefProvider& provider, BuildStats& stats,
                                                     CorefStats& coref_stats) {
  auto examples = build_examples(conv, opt, Tokenizer{}, &stats);
  for (auto& ex : examples) ex.coref = annotate_coreference(ex, conv, provider, coref_stats);
  return examples;
}

inline PreprocessedData preprocess(const std::vector<RawConversation>& conversations, const PreprocessOptions& opt,
                                   const CorefProvider& provider) {
  PreprocessedData out;
  auto split = split_dataset(conversations, opt.seed);
  BuildStats stats;
  CorefStats coref_stats;
  const std::vector<RawConversation>* parts[3] = {&split.train, &split.validation, &split.test};
  std::vector<ProcessedExample>* dst[3] = {&out.examples.train, &out.examples.validation, &out.examples.test};
  for (int s = 0; s < 3; ++s) {
    out.report.split_conversations[s] = parts[s]->size();
    for (const auto& conv : *parts[s]) {
      auto ex = build_annotated(conv, opt.build, provider, stats, coref_stats);
      dst[s]->insert(dst[s]->end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
    }
    out.report.split_examples[s] = dst[s]->size();
  }
  out.vocabulary = Vocabulary::build(out.examples.train, opt.min_freq);
  out.report.conversations = conversations.size();
  out.report.total_turns = stats.total_turns;
  out.report.filtered_turns = stats.filtered_turns;
  out.report.examples = out.report.split_examples[0] + out.report.split_examples[1] + out.report.split_examples[2];
  out.report.weakly_aligned = stats.weakly_aligned;
  out.report.mean_span_f1 = out.report.examples == 0 ? 0.0 : stats.span_f1_sum / static_cast<double>(out.report.examples);
  out.report.coref_annotated = coref_stats.annotated;
  out.report.coref_dropped = coref_stats.dropped;
  out.report.vocab_size = out.vocabulary.size();
  return out;
}

inline void write_preprocessed(const PreprocessedData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_examples((dir / "train.jsonl").string(), data.examples.train);
  write_examples((dir / "validation.jsonl").string(), data.examples.validation);
  write_examples((dir / "test.jsonl").string(), data.examples.test);
  data.vocabulary.save((dir / "vocab.txt").string());
  util::atomic_write(dir / "preprocess_report.json", to_json(data.report).dump(2) + "\n");
}

}  // namespace coqg::corpus
