#pragma once

#include "coqg/corpus/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace coqg::corpus {

template <typename T>
struct DatasetSplit {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

/// Conversation-level 80/10/10 split. The permutation is a Fisher-Yates
/// shuffle driven directly by mt19937_64 output, so it is identical across
/// standard libraries for a given seed.
template <typename T>
DatasetSplit<T> split_dataset(std::vector<T> items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
  const std::size_t n = items.size();
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n))));
  DatasetSplit<T> out;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < n_train ? out.train : (k < n_train + n_val ? out.validation : out.test);
    dst.push_back(std::move(items[k]));
  }
  return out;
}

}  // namespace coqg::corpus
