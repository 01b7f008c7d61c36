#include "dsbr/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace dsbr {

AttentionParams make_attention(int d, Rng& rng) {
  AttentionParams a;
  a.w_last = init_uniform(1, static_cast<std::size_t>(d), rng);
  a.w_item = init_uniform(1, static_cast<std::size_t>(d), rng);
  return a;
}

Tensor init_uniform(std::size_t rows, std::size_t cols, Rng& rng, bool requires_grad) {
  double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Tensor t = Tensor::zeros(rows, cols, requires_grad);
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor encode_session(const std::vector<int>& items, const Tensor& item_table,
                      const AttentionParams& attn) {
  if (items.empty()) throw std::invalid_argument("encode_session: empty session");
  Tensor xs = gather_rows(item_table, items);
  Tensor xlast = gather_rows(item_table, {items.back()});
  Tensor gate_last = matmul_nt(xlast, attn.w_last);        // 1 x 1
  Tensor gate_items = matmul_nt(xs, attn.w_item);          // m x 1
  Tensor alpha = sigmoid(add(gate_items, gate_last));      // m x 1
  return matmul(transpose(alpha), xs);                     // 1 x d
}

Tensor info_nce(const Tensor& anchors, const Tensor& candidates, double tau) {
  if (anchors.rows() != candidates.rows() || anchors.cols() != candidates.cols())
    throw std::invalid_argument("info_nce: shape mismatch");
  if (tau <= 0.0) throw std::invalid_argument("info_nce: tau must be positive");
  // A single row has no negatives: softmax over one entry is 1, loss 0.
  Tensor an = l2_normalize_rows(anchors);
  Tensor cn = l2_normalize_rows(candidates);
  Tensor sim = scale(matmul_nt(an, cn), 1.0 / tau);  // B x B cosine / tau
  Tensor logp = log_clamped(softmax_rows(sim));
  std::vector<int> diag(anchors.rows());
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = static_cast<int>(i);
  return scale(mean_all(take_per_row(logp, diag)), -1.0);
}

Tensor align_loss(const Tensor& s_id, const Tensor& s_mo, double tau) {
  return scale(add(info_nce(s_id, s_mo, tau), info_nce(s_mo, s_id, tau)), 0.5);
}

}  // namespace dsbr
