#pragma once

#include <vector>

#include "dsbr/rng.hpp"
#include "dsbr/tensor.hpp"

namespace dsbr {

// Soft-attention session readout. Each item gets a gate
//   alpha_i = sigmoid(w_last . x_last + w_item . x_i)
// anchored on the final (most recent) item, and the session representation
// is the alpha-weighted sum of its item embeddings.
struct AttentionParams {
  Tensor w_last;  // 1 x d
  Tensor w_item;  // 1 x d
};

AttentionParams make_attention(int d, Rng& rng);

// items: vocabulary indices of one session (or prefix), in order.
// item_table: n x d graph-enhanced embeddings. Returns 1 x d.
Tensor encode_session(const std::vector<int>& items, const Tensor& item_table,
                      const AttentionParams& attn);

// Uniform init in ±1/sqrt(cols), the scale used for all tables here.
Tensor init_uniform(std::size_t rows, std::size_t cols, Rng& rng, bool requires_grad = true);

// InfoNCE with cosine similarities: row b of `anchors` should match row b of
// `candidates` against every other candidate row, temperature-scaled.
// Returns the mean over rows of -log softmax(sim / tau)[b, b]. A single row
// has no negatives and yields exactly 0. Zero-norm rows keep cosine 0.
Tensor info_nce(const Tensor& anchors, const Tensor& candidates, double tau);

// Cross-channel alignment: InfoNCE averaged over both anchor directions.
Tensor align_loss(const Tensor& s_id, const Tensor& s_mo, double tau);

}  // namespace dsbr
