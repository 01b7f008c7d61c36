#include "dsbr/metrics.hpp"

#include <stdexcept>

namespace dsbr {

int rank_of_target(const double* scores, std::size_t n, std::size_t target) {
  if (target >= n) throw std::invalid_argument("rank_of_target: target out of range");
  double ts = scores[target];
  int rank = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i] > ts) ++rank;
    else if (scores[i] == ts && i < target) ++rank;
  }
  return rank;
}

RankingMetrics metrics_from_ranks(const std::vector<int>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("metrics_from_ranks: no ranks");
  RankingMetrics m;
  m.count = ranks.size();
  std::size_t hits10 = 0, hits20 = 0;
  double rr10 = 0.0, rr20 = 0.0;
  for (int r : ranks) {
    if (r <= 10) {
      ++hits10;
      rr10 += 1.0 / static_cast<double>(r);
    }
    if (r <= 20) {
      ++hits20;
      rr20 += 1.0 / static_cast<double>(r);
    }
  }
  // Divide last: 100 * hits is exact, so a full-hit list yields exactly 100
  // (hits * (100.0 / n) can overshoot by an ulp, e.g. n = 11).
  double n = static_cast<double>(ranks.size());
  m.p10 = 100.0 * static_cast<double>(hits10) / n;
  m.p20 = 100.0 * static_cast<double>(hits20) / n;
  m.mrr10 = 100.0 * rr10 / n;
  m.mrr20 = 100.0 * rr20 / n;
  return m;
}

}  // namespace dsbr
