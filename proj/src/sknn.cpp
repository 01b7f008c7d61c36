#include "dsbr/sknn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace dsbr {

RankingMetrics sknn_evaluate(const std::vector<SessionRecord>& train_sessions,
                             const std::vector<PrefixExample>& test_examples, int n_items,
                             int k_nn) {
  if (train_sessions.empty() || test_examples.empty())
    throw std::invalid_argument("sknn_evaluate: empty split");
  if (k_nn < 1) throw std::invalid_argument("sknn_evaluate: k_nn must be positive");

  std::vector<std::vector<int>> distinct(train_sessions.size());
  std::vector<double> inv_norm(train_sessions.size());
  std::vector<std::vector<int>> sessions_with_item(static_cast<std::size_t>(n_items));
  for (std::size_t s = 0; s < train_sessions.size(); ++s) {
    std::set<int> items(train_sessions[s].items.begin(), train_sessions[s].items.end());
    distinct[s].assign(items.begin(), items.end());
    inv_norm[s] = 1.0 / std::sqrt(static_cast<double>(items.size()));
    for (int it : distinct[s]) sessions_with_item[static_cast<std::size_t>(it)].push_back(
        static_cast<int>(s));
  }

  std::vector<int> overlap(train_sessions.size(), 0);
  std::vector<int> touched;
  std::vector<int> ranks;
  ranks.reserve(test_examples.size());
  std::vector<double> scores(static_cast<std::size_t>(n_items));

  for (const auto& ex : test_examples) {
    std::set<int> q(ex.prefix.begin(), ex.prefix.end());
    touched.clear();
    for (int it : q)
      for (int s : sessions_with_item[static_cast<std::size_t>(it)]) {
        if (overlap[static_cast<std::size_t>(s)] == 0) touched.push_back(s);
        ++overlap[static_cast<std::size_t>(s)];
      }
    double q_inv = 1.0 / std::sqrt(static_cast<double>(q.size()));
    std::vector<std::pair<double, int>> sims;
    sims.reserve(touched.size());
    for (int s : touched) {
      double sim = static_cast<double>(overlap[static_cast<std::size_t>(s)]) * q_inv *
                   inv_norm[static_cast<std::size_t>(s)];
      sims.emplace_back(sim, s);
      overlap[static_cast<std::size_t>(s)] = 0;
    }
    auto better = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    };
    std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k_nn), sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(keep),
                      sims.end(), better);
    sims.resize(keep);

    std::fill(scores.begin(), scores.end(), 0.0);
    for (const auto& [sim, s] : sims)
      for (int it : distinct[static_cast<std::size_t>(s)])
        scores[static_cast<std::size_t>(it)] += sim;
    for (int it : q) scores[static_cast<std::size_t>(it)] = -std::numeric_limits<double>::infinity();
    ranks.push_back(rank_of_target(scores.data(), scores.size(),
                                   static_cast<std::size_t>(ex.target)));
  }
  return metrics_from_ranks(ranks);
}

}  // namespace dsbr
