#pragma once

#include <cstddef>
#include <vector>

namespace dsbr {

// 1-based rank of `target` under descending score, ties resolved in favor
// of the lower item index (so an item tied with the target but indexed
// below it outranks the target).
int rank_of_target(const double* scores, std::size_t n, std::size_t target);

struct RankingMetrics {
  double p10 = 0.0, p20 = 0.0;    // percent of cases ranked within K
  double mrr10 = 0.0, mrr20 = 0.0;  // mean reciprocal rank x 100, 0 past K
  std::size_t count = 0;
};

RankingMetrics metrics_from_ranks(const std::vector<int>& ranks);

}  // namespace dsbr
