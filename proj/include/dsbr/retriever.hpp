#pragma once

#include <vector>

#include "dsbr/rng.hpp"
#include "dsbr/tensor.hpp"

namespace dsbr {

// Learned similarity between a query session representation and a stored
// one: a 2d -> h -> 1 MLP with SiLU. The first layer's weight is kept as
// two d x h blocks (query block, candidate block) — algebraically the same
// as concatenating the inputs, but it lets the whole bank be projected once
// per batch (reps @ w_cand) and candidates scored from cached projections
// with arithmetic identical to the tape path, bit for bit.
struct ScoreNet {
  Tensor w_query;   // d x h
  Tensor w_cand;    // d x h
  Tensor b_hidden;  // 1 x h
  Tensor w_out;     // h x 1
  Tensor b_out;     // 1 x 1
  int dim = 0;
  int hidden = 0;
};

ScoreNet make_scorenet(int d, Rng& rng);  // hidden width = d

// Tape-recorded scores: query is 1 x d (broadcast over candidates) or
// B x d matching candidates row for row. Returns B x 1.
Tensor score_pairs(const ScoreNet& net, const Tensor& query, const Tensor& cands);

// Frozen snapshot of training-session representations used as the
// retrieval memory. Row r holds session session_of_row[r].
struct SessionBank {
  Tensor reps;  // S x d, no grad
  std::vector<int> session_of_row;
  int epoch_stamp = -1;
};

struct BankProjection {
  Tensor proj;  // S x h = reps @ w_cand, no grad
};

BankProjection project_bank(const ScoreNet& net, const SessionBank& bank);

struct Retrieved {
  std::vector<int> rows;       // k bank rows, score descending, ties to lower row
  std::vector<double> scores;  // matching raw scores
};

// Candidate pool for one query: pool_size rows sampled without replacement,
// excluding rows of exclude_session (negative = keep everything). A pool
// request larger than the eligible set returns the whole eligible set, in
// row order.
std::vector<int> sample_pool(const SessionBank& bank, int pool_size, Rng& rng,
                             int exclude_session = -1);

// Scores the pool off the cached projections and returns the top k.
Retrieved retrieve_topk(const double* query_row, const ScoreNet& net, const SessionBank& bank,
                        const BankProjection& bp, const std::vector<int>& pool, int k);

// Retriever training signal: neighbors that let the generator denoise well
// should score high, so the softmax weights are pushed toward low-loss
// neighbors. omega: 1 x k (tape), neighbor_losses: k constants.
Tensor feedback_loss(const Tensor& omega, const std::vector<double>& neighbor_losses);

}  // namespace dsbr
