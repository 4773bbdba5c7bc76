#pragma once

#include "coqg/corpus/types.hpp"
#include "coqg/util/atomic_file.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace coqg::corpus {

inline nlohmann::json to_json(const ProcessedExample& ex) {
  nlohmann::json j;
  j["conversation_id"] = ex.conversation_id;
  j["passage_tokens"] = ex.passage_tokens;
  auto& sb = j["sentence_boundaries"] = nlohmann::json::array();
  for (const auto& s : ex.sentence_boundaries) sb.push_back({s.first, s.last});
  j["answer_span"] = {ex.answer_span.first, ex.answer_span.last};
  auto& bio = j["bio_tags"] = nlohmann::json::array();
  for (auto t : ex.bio_tags) bio.push_back(to_string(t));
  j["chunk_ids"] = ex.chunk_ids;
  j["turn_number"] = ex.turn_number;
  j["history"] = ex.history;
  j["target_question"] = ex.target_question;
  auto& ev = j["evidence"] = nlohmann::json::array();
  for (auto e : ex.evidence) ev.push_back(to_string(e));
  if (ex.coref) {
    j["coref"] = {{"mention_positions", ex.coref->mention_positions},
                  {"pronoun", ex.coref->pronoun},
                  {"confidence", ex.coref->confidence}};
  } else {
    j["coref"] = nullptr;
  }
  j["weakly_aligned"] = ex.weakly_aligned;
  return j;
}

inline ProcessedExample example_from_json(const nlohmann::json& j) {
  ProcessedExample ex;
  ex.conversation_id = j.value("conversation_id", std::string());
  ex.passage_tokens = j.at("passage_tokens").get<std::vector<std::string>>();
  for (const auto& s : j.at("sentence_boundaries")) ex.sentence_boundaries.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
  ex.answer_span = {j.at("answer_span").at(0).get<int>(), j.at("answer_span").at(1).get<int>()};
  for (const auto& t : j.at("bio_tags")) ex.bio_tags.push_back(bio_from_string(t.get<std::string>()));
  ex.chunk_ids = j.at("chunk_ids").get<std::vector<int>>();
  ex.turn_number = j.at("turn_number").get<int>();
  ex.history = j.at("history").get<std::vector<std::vector<std::string>>>();
  ex.target_question = j.at("target_question").get<std::vector<std::string>>();
  for (const auto& e : j.at("evidence")) ex.evidence.push_back(evidence_from_string(e.get<std::string>()));
  if (j.contains("coref") && !j["coref"].is_null()) {
    CorefAnnotation a;
    a.mention_positions = j["coref"].at("mention_positions").get<std::vector<int>>();
    a.pronoun = j["coref"].at("pronoun").get<int>();
    a.confidence = j["coref"].value("confidence", 1.0);
    ex.coref = std::move(a);
  }
  ex.weakly_aligned = j.value("weakly_aligned", false);
  return ex;
}

inline std::string to_jsonl(std::span<const ProcessedExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_json(ex).dump();
    out += '\n';
  }
  return out;
}

inline void write_examples(const std::string& path, std::span<const ProcessedExample> examples) {
  util::atomic_write(path, to_jsonl(examples));
}

inline std::vector<ProcessedExample> read_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path);
  std::vector<ProcessedExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw CorpusError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace coqg::corpus
