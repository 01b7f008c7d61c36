#include "dsbr/retriever.hpp"

#include <algorithm>
#include <stdexcept>

#include "dsbr/encoder.hpp"

namespace dsbr {

ScoreNet make_scorenet(int d, Rng& rng) {
  ScoreNet net;
  net.dim = d;
  net.hidden = d;
  std::size_t dd = static_cast<std::size_t>(d);
  // Both blocks scale with the full 2d fan-in of the logical concat layer.
  double bound = 1.0 / std::sqrt(2.0 * static_cast<double>(d));
  net.w_query = Tensor::zeros(dd, dd, true);
  for (double& v : net.w_query.values()) v = rng.uniform(-bound, bound);
  net.w_cand = Tensor::zeros(dd, dd, true);
  for (double& v : net.w_cand.values()) v = rng.uniform(-bound, bound);
  net.b_hidden = Tensor::zeros(1, dd, true);
  net.w_out = init_uniform(dd, 1, rng);
  net.b_out = Tensor::zeros(1, 1, true);
  return net;
}

Tensor score_pairs(const ScoreNet& net, const Tensor& query, const Tensor& cands) {
  if (query.cols() != static_cast<std::size_t>(net.dim) ||
      cands.cols() != static_cast<std::size_t>(net.dim))
    throw std::invalid_argument("score_pairs: dimension mismatch");
  if (query.rows() != 1 && query.rows() != cands.rows())
    throw std::invalid_argument("score_pairs: query must be one row or match candidates");
  Tensor qp = matmul(query, net.w_query);  // 1 x h or B x h
  Tensor cp = matmul(cands, net.w_cand);   // B x h
  // Kernel mirror: hidden = (cp + qp) + b, SiLU, then w_out dot + b_out.
  Tensor h = silu(add(add(cp, qp), net.b_hidden));
  return add(matmul(h, net.w_out), net.b_out);  // B x 1
}

BankProjection project_bank(const ScoreNet& net, const SessionBank& bank) {
  NoGradGuard ng;
  BankProjection bp;
  bp.proj = matmul(bank.reps, net.w_cand);
  return bp;
}

std::vector<int> sample_pool(const SessionBank& bank, int pool_size, Rng& rng,
                             int exclude_session) {
  int s = static_cast<int>(bank.reps.rows());
  if (pool_size < 1) throw std::invalid_argument("sample_pool: pool_size must be positive");
  std::vector<int> eligible;
  eligible.reserve(static_cast<std::size_t>(s));
  for (int r = 0; r < s; ++r)
    if (exclude_session < 0 || bank.session_of_row[static_cast<std::size_t>(r)] != exclude_session)
      eligible.push_back(r);
  if (static_cast<int>(eligible.size()) <= pool_size) return eligible;
  std::vector<int> idx = rng.sample_without_replacement(static_cast<int>(eligible.size()),
                                                        pool_size);
  std::vector<int> pool;
  pool.reserve(idx.size());
  for (int i : idx) pool.push_back(eligible[static_cast<std::size_t>(i)]);
  return pool;
}

namespace {

// Must stay arithmetically identical to score_pairs: (cp + qp) + b per
// hidden unit, SiLU, ascending-index dot with w_out, plus b_out.
double score_from_projections(const double* qp, const double* cp, const ScoreNet& net) {
  const double* b = net.b_hidden.values().data();
  const double* w2 = net.w_out.values().data();
  double acc = 0.0;
  for (int j = 0; j < net.hidden; ++j) {
    double h = silu_scalar((cp[j] + qp[j]) + b[j]);
    acc += h * w2[j];
  }
  return acc + net.b_out.values()[0];
}

}  // namespace

Retrieved retrieve_topk(const double* query_row, const ScoreNet& net, const SessionBank& bank,
                        const BankProjection& bp, const std::vector<int>& pool, int k) {
  if (k < 1) throw std::invalid_argument("retrieve_topk: k must be positive");
  if (static_cast<int>(pool.size()) < k)
    throw std::invalid_argument("retrieve_topk: pool smaller than k");
  if (bp.proj.rows() != bank.reps.rows())
    throw std::invalid_argument("retrieve_topk: projection does not match bank");
  NoGradGuard ng;
  Tensor q = Tensor::of(1, static_cast<std::size_t>(net.dim),
                        std::vector<double>(query_row, query_row + net.dim));
  Tensor qp = matmul(q, net.w_query);
  const double* qpd = qp.values().data();
  std::vector<std::pair<double, int>> scored;
  scored.reserve(pool.size());
  for (int r : pool)
    scored.emplace_back(
        score_from_projections(qpd, bp.proj.row_ptr(static_cast<std::size_t>(r)), net), r);
  auto better = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
  Retrieved out;
  out.rows.reserve(static_cast<std::size_t>(k));
  out.scores.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.scores.push_back(scored[static_cast<std::size_t>(i)].first);
    out.rows.push_back(scored[static_cast<std::size_t>(i)].second);
  }
  return out;
}

Tensor feedback_loss(const Tensor& omega, const std::vector<double>& neighbor_losses) {
  if (omega.rows() != 1 || omega.cols() != neighbor_losses.size())
    throw std::invalid_argument("feedback_loss: omega must be 1 x k");
  Tensor losses = Tensor::of(1, neighbor_losses.size(),
                             std::vector<double>(neighbor_losses.begin(), neighbor_losses.end()));
  return dot(omega, losses);
}

}  // namespace dsbr
