#pragma once

#include "coqg/corpus/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace coqg::corpus {

/// Checks the RawConversation invariants: consecutive turn ids from 1 and
/// rationales inside the passage.
inline void validate(const RawConversation& conv) {
  for (std::size_t k = 0; k < conv.turns.size(); ++k) {
    const RawTurn& t = conv.turns[k];
    if (t.turn_id != static_cast<int>(k) + 1)
      throw CorpusError("conversation " + conv.id + ": turn ids must be consecutive from 1, found " +
                        std::to_string(t.turn_id) + " at position " + std::to_string(k + 1));
    if (t.rationale.present() && static_cast<std::size_t>(t.rationale.end) > conv.passage.size())
      throw CorpusError("conversation " + conv.id + " turn " + std::to_string(t.turn_id) + ": rationale outside passage");
  }
}

/// Parses the CoQA schema: {"data": [{"id", "story", "questions": [...], "answers": [...]}]}.
inline std::vector<RawConversation> parse_coqa(const nlohmann::json& root) {
  if (!root.is_object() || !root.contains("data") || !root["data"].is_array())
    throw CorpusError("CoQA file: missing top-level \"data\" array");
  std::vector<RawConversation> out;
  const auto& data = root["data"];
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& item = data[k];
    const std::string where = "record " + std::to_string(k) + (item.contains("id") && item["id"].is_string()
                                                                  ? " (id " + item["id"].get<std::string>() + ")"
                                                                  : std::string());
    try {
      RawConversation conv;
      conv.id = item.contains("id") ? item.at("id").get<std::string>() : "conv-" + std::to_string(k);
      conv.passage = item.at("story").get<std::string>();
      const auto& qs = item.at("questions");
      const auto& as = item.at("answers");
      if (qs.size() != as.size())
        throw CorpusError(where + ": " + std::to_string(qs.size()) + " questions but " + std::to_string(as.size()) +
                          " answers");
      for (std::size_t t = 0; t < qs.size(); ++t) {
        RawTurn turn;
        turn.turn_id = qs[t].at("turn_id").get<int>();
        if (as[t].at("turn_id").get<int>() != turn.turn_id)
          throw CorpusError(where + ": question/answer turn ids differ at position " + std::to_string(t + 1));
        turn.question = qs[t].at("input_text").get<std::string>();
        turn.answer = as[t].at("input_text").get<std::string>();
        turn.rationale.begin = as[t].value("span_start", -1L);
        turn.rationale.end = as[t].value("span_end", -1L);
        conv.turns.push_back(std::move(turn));
      }
      validate(conv);
      out.push_back(std::move(conv));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(where + ": " + e.what());
    } catch (const CorpusError& e) {
      const std::string msg = e.what();
      throw CorpusError(msg.rfind("record", 0) == 0 ? msg : where + ": " + msg);
    }
  }
  return out;
}

inline std::vector<RawConversation> load_coqa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::parse_error& e) {
    throw CorpusError(path.string() + ": malformed JSON: " + e.what());
  }
  return parse_coqa(root);
}

inline nlohmann::json to_coqa_json(const std::vector<RawConversation>& convs) {
  nlohmann::json data = nlohmann::json::array();
  for (const auto& c : convs) {
    nlohmann::json qs = nlohmann::json::array(), as = nlohmann::json::array();
    for (const auto& t : c.turns) {
      qs.push_back({{"input_text", t.question}, {"turn_id", t.turn_id}});
      std::string span_text;
      if (t.rationale.present()) span_text = c.passage.substr(static_cast<std::size_t>(t.rationale.begin),
                                                              static_cast<std::size_t>(t.rationale.end - t.rationale.begin));
      as.push_back({{"span_start", t.rationale.begin},
                    {"span_end", t.rationale.end},
                    {"span_text", span_text},
                    {"input_text", t.answer},
                    {"turn_id", t.turn_id}});
    }
    data.push_back({{"id", c.id}, {"story", c.passage}, {"questions", qs}, {"answers", as}});
  }
  return {{"version", "1.0"}, {"data", data}};
}

}  // namespace coqg::corpus
