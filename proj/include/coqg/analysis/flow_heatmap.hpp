#pragma once

#include "coqg/corpus/examples_builder.hpp"
#include "coqg/corpus/tokenizer.hpp"
#include "coqg/corpus/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

namespace coqg::analysis {

struct FlowHeatmap {
  int chunks = 10;
  std::vector<std::vector<double>> cells;  // [turn chunk][passage chunk]
  std::vector<std::size_t> row_support;    // conversations contributing to each row

  /// Expected passage chunk per turn chunk; NaN for rows without mass.
  std::vector<double> mean_passage_chunk() const {
    std::vector<double> out;
    for (const auto& row : cells) {
      const double mass = std::accumulate(row.begin(), row.end(), 0.0);
      double m = 0.0;
      for (std::size_t c = 0; c < row.size(); ++c) m += static_cast<double>(c) * row[c];
      out.push_back(mass > 0.0 ? m / mass : std::nan(""));
    }
    return out;
  }
};

/// Rationale-token mass of each turn chunk over passage chunks. Turn i of T
/// falls in chunk floor(i * K / T), passage token t of m in floor(t * K / m).
/// Each conversation's rows are normalised, then rows are averaged over the
/// conversations that have mass there.
inline FlowHeatmap flow_heatmap(std::span<const corpus::RawConversation> conversations, int num_chunks = 10,
                                const corpus::Tokenizer& tok = {}) {
  if (num_chunks < 1) throw std::invalid_argument("flow_heatmap: num_chunks must be >= 1");
  const auto k = static_cast<std::size_t>(num_chunks);
  FlowHeatmap out;
  out.chunks = num_chunks;
  out.cells.assign(k, std::vector<double>(k, 0.0));
  out.row_support.assign(k, 0);
  for (const auto& conv : conversations) {
    const auto tokens = tok.tokenize(conv.passage);
    if (tokens.empty() || conv.turns.empty()) continue;
    const auto m = static_cast<long long>(tokens.size());
    const auto turns = static_cast<long long>(conv.turns.size());
    std::vector<std::vector<double>> local(k, std::vector<double>(k, 0.0));
    for (long long i = 0; i < turns; ++i) {
      const auto span = corpus::tokens_in(tokens, conv.turns[static_cast<std::size_t>(i)].rationale);
      if (!span) continue;
      const auto r = static_cast<std::size_t>(i * num_chunks / turns);
      for (int t = span->first; t <= span->last; ++t) local[r][static_cast<std::size_t>(t * num_chunks / m)] += 1.0;
    }
    for (std::size_t r = 0; r < k; ++r) {
      const double mass = std::accumulate(local[r].begin(), local[r].end(), 0.0);
      if (mass <= 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) out.cells[r][c] += local[r][c] / mass;
      ++out.row_support[r];
    }
  }
  for (std::size_t r = 0; r < k; ++r)
    if (out.row_support[r] > 0)
      for (double& v : out.cells[r]) v /= static_cast<double>(out.row_support[r]);
  return out;
}

namespace detail {
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = avg;
    i = j + 1;
  }
  return rank;
}
}  // namespace detail

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  const auto rx = detail::average_ranks(x), ry = detail::average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : std::nan("");
}

struct FlowSummary {
  std::vector<double> mean_chunk;
  double spearman = 0.0;
  int increasing_pairs = 0;
  int non_decreasing_pairs = 0;
  int compared_pairs = 0;
};

inline FlowSummary summarize(const FlowHeatmap& h) {
  FlowSummary s;
  s.mean_chunk = h.mean_passage_chunk();
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < s.mean_chunk.size(); ++r) {
    if (std::isnan(s.mean_chunk[r])) continue;
    xs.push_back(static_cast<double>(r));
    ys.push_back(s.mean_chunk[r]);
  }
  s.spearman = spearman(xs, ys);
  for (std::size_t i = 1; i < ys.size(); ++i) {
    ++s.compared_pairs;
    if (ys[i] > ys[i - 1]) ++s.increasing_pairs;
    if (ys[i] >= ys[i - 1]) ++s.non_decreasing_pairs;
  }
  return s;
}

inline std::string heatmap_csv(const FlowHeatmap& h) {
  std::ostringstream out;
  out.precision(9);
  out << "turn_chunk";
  for (int c = 0; c < h.chunks; ++c) out << ",passage_chunk_" << c;
  out << '\n';
  for (std::size_t r = 0; r < h.cells.size(); ++r) {
    out << r;
    for (double v : h.cells[r]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json to_json(const FlowSummary& s, const FlowHeatmap& h) {
  nlohmann::json means = nlohmann::json::array();
  for (double m : s.mean_chunk) means.push_back(std::isnan(m) ? nlohmann::json(nullptr) : nlohmann::json(m));
  return {{"num_chunks", h.chunks},
          {"mean_passage_chunk", means},
          {"row_support", h.row_support},
          {"spearman", std::isnan(s.spearman) ? nlohmann::json(nullptr) : nlohmann::json(s.spearman)},
          {"increasing_pairs", s.increasing_pairs},
          {"non_decreasing_pairs", s.non_decreasing_pairs},
          {"compared_pairs", s.compared_pairs}};
}

}  // namespace coqg::analysis
