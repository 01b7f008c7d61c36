#pragma once

#include <vector>

#include "dsbr/data.hpp"
#include "dsbr/metrics.hpp"

namespace dsbr {

// Session-kNN baseline. The query prefix and every training session are
// binary item-incidence vectors; the k_nn most cosine-similar training
// sessions (ties to the lower session index) vote for their items with
// their similarity, items already in the query excluded from scoring.
RankingMetrics sknn_evaluate(const std::vector<SessionRecord>& train_sessions,
                             const std::vector<PrefixExample>& test_examples, int n_items,
                             int k_nn);

}  // namespace dsbr
