#pragma once

#include "coqg/corpus/tokenizer.hpp"
#include "coqg/corpus/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace coqg::testkit {

using corpus::TokenSpan;
using corpus::is_punctuation_token;

// Token F1 by multiset intersection over every span in [lo, hi]. Ties go to
// the shorter span, then the earlier start.
struct Oracle {
  TokenSpan span{0, 0};
  double f1 = 0.0;
};

inline Oracle brute_force(const std::vector<std::string>& p, const std::vector<std::string>& answer, int lo, int hi) {
  std::map<std::string, int> want;
  int alen = 0;
  for (const auto& a : answer)
    if (!is_punctuation_token(a)) {
      ++want[a];
      ++alen;
    }
  Oracle best;
  long num_best = 0, den_best = 1;  // F1 = num/den
  for (int s = lo; s <= hi; ++s) {
    for (int e = s; e <= hi; ++e) {
      std::map<std::string, int> have;
      for (int k = s; k <= e; ++k) ++have[p[static_cast<std::size_t>(k)]];
      long common = 0;
      for (const auto& [w, n] : want)
        if (auto it = have.find(w); it != have.end()) common += std::min(n, it->second);
      const long num = 2 * common, den = (e - s + 1) + alen;
      const long lhs = num * den_best, rhs = num_best * den;
      const int len = e - s + 1, best_len = best.span.last - best.span.first + 1;
      const bool better = lhs > rhs || (lhs == rhs && num > 0 && (len < best_len || (len == best_len && s < best.span.first)));
      if (better) {
        num_best = num;
        den_best = den;
        best.span = {s, e};
        best.f1 = static_cast<double>(num) / static_cast<double>(den);
      }
    }
  }
  return best;
}


}  // namespace coqg::testkit
