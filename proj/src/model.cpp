#include "dsbr/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "dsbr/pca.hpp"

namespace dsbr {

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "no-RAD" || name == "no-rad") return Variant::no_rad;
  if (name == "no-FDRQ" || name == "no-fdrq") return Variant::no_fdrq;
  if (name == "no-SAD" || name == "no-sad") return Variant::no_sad;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (valid: full, no-RAD, no-FDRQ, no-SAD)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full:
      return "full";
    case Variant::no_rad:
      return "no-RAD";
    case Variant::no_fdrq:
      return "no-FDRQ";
    case Variant::no_sad:
      return "no-SAD";
  }
  throw std::logic_error("variant_name: unhandled variant");
}

Tensor fuse(const Tensor& s_id, const Tensor& s_n0, const Tensor& rho_raw) {
  if (s_id.rows() != s_n0.rows() || s_id.cols() != s_n0.cols())
    throw std::invalid_argument("fuse: shape mismatch");
  if (rho_raw.size() != 1) throw std::invalid_argument("fuse: rho_raw must be a scalar");
  Tensor rho = sigmoid(rho_raw);
  Tensor one_minus = sub(Tensor::full(1, 1, 1.0), rho);
  return add(mul(s_id, rho), mul(s_n0, one_minus));
}

Tensor score_items(const Tensor& s_f, const Tensor& item_table) {
  return matmul_nt(s_f, item_table);
}

Tensor recommendation_loss(const Tensor& scores, const std::vector<int>& targets, bool literal) {
  if (targets.size() != scores.rows())
    throw std::invalid_argument("recommendation_loss: one target per row");
  Tensor p = softmax_rows(scores);
  Tensor log_p = log_clamped(p);
  Tensor picked = take_per_row(log_p, targets);  // B x 1
  if (!literal) return scale(mean_all(picked), -1.0);
  // Summed binary form over the softmax vector:
  //   -[log p_t + sum_{i != t} log(1 - p_i)], batch mean.
  Tensor log_1m = log_clamped(sub(Tensor::full(scores.rows(), scores.cols(), 1.0), p));
  Tensor row_sum = matmul(log_1m, Tensor::full(scores.cols(), 1, 1.0));  // B x 1
  Tensor at_target = take_per_row(log_1m, targets);
  Tensor per_example = add(picked, sub(row_sum, at_target));
  return scale(mean_all(per_example), -1.0);
}

Tensor total_loss(const Tensor& l_e, const Tensor& l_d, const Tensor& l_r, const Tensor& l_s,
                  const Tensor& l_m, const Tensor& l_align, double gamma, double delta,
                  double align_weight) {
  if (!l_e.defined()) throw std::invalid_argument("total_loss: recommendation loss required");
  if (gamma < 0.0 || delta < 0.0 || align_weight < 0.0)
    throw std::invalid_argument("total_loss: weights must be nonnegative");
  Tensor total = l_e;
  Tensor group;
  for (const Tensor* t : {&l_d, &l_r, &l_s})
    if (t->defined()) group = group.defined() ? add(group, *t) : *t;
  if (group.defined()) total = add(total, scale(group, gamma));
  if (l_m.defined()) total = add(total, scale(l_m, delta));
  if (l_align.defined()) total = add(total, scale(l_align, align_weight));
  return total;
}

namespace {

double cosine_or_zero(const double* a, const double* b, std::size_t n) {
  double num = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return num / (std::sqrt(na) * std::sqrt(nb));
}

Tensor mean_of(const std::vector<Tensor>& terms) {
  Tensor acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return scale(acc, 1.0 / static_cast<double>(terms.size()));
}

}  // namespace

Model::Model(ModelConfig cfg, const SessionDataset& ds)
    : cfg_(cfg),
      data_(&ds),
      rng_shuffle_(Rng::substream(cfg.seed, "shuffle")),
      rng_diffusion_(Rng::substream(cfg.seed, "diffusion")),
      rng_pool_(Rng::substream(cfg.seed, "pool")) {
  if (cfg_.dim < 1) throw std::invalid_argument("Model: dim must be positive");
  if (cfg_.gcn_layers < 0) throw std::invalid_argument("Model: gcn_layers must be >= 0");
  if (!(cfg_.tau > 0.0)) throw std::invalid_argument("Model: tau must be positive");
  if (cfg_.gen_steps < 1 || cfg_.gen_steps > cfg_.diffusion_steps)
    throw std::invalid_argument("Model: gen_steps must be in [1, diffusion_steps]");
  if (cfg_.top_k < 1) throw std::invalid_argument("Model: top_k must be positive");
  if (cfg_.pool_size < cfg_.top_k)
    throw std::invalid_argument("Model: pool_size must be >= top_k");
  if (cfg_.batch_size < 1) throw std::invalid_argument("Model: batch_size must be positive");
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("Model: lr must be positive");
  if (cfg_.gamma < 0.0 || cfg_.delta < 0.0 || cfg_.align_weight < 0.0)
    throw std::invalid_argument("Model: loss weights must be nonnegative");
  if (ds.vocab.size() == 0) throw std::invalid_argument("Model: empty vocabulary");
  if (ds.train.empty()) throw std::invalid_argument("Model: empty training split");

  ns_ = linear_schedule(cfg_.diffusion_steps, cfg_.beta_min, cfg_.beta_max);
  graph_ = build_cograph(ds.train, static_cast<int>(ds.vocab.size()), cfg_.graph_self_loops);
  train_examples_ = all_prefix_examples(ds.train);
  test_examples_ = final_item_examples(ds.test);
  if (train_examples_.empty())
    throw std::invalid_argument("Model: no training examples (all sessions length 1?)");
  if (retrieval_active() && static_cast<int>(ds.train.size()) <= cfg_.top_k)
    throw std::invalid_argument("Model: retrieval needs more than top_k training sessions");

  std::size_t n = ds.vocab.size();
  std::size_t d = static_cast<std::size_t>(cfg_.dim);
  Rng init = Rng::substream(cfg_.seed, "init");
  e_id_ = init_uniform(n, d, init);
  bool train_mo = !cfg_.freeze_modality;
  if (ds.feature_dim == 0) {
    e_mo_ = init_uniform(n, d, init, train_mo);
  } else if (ds.feature_dim == d) {
    e_mo_ = Tensor::of(n, d, ds.features, train_mo);
  } else if (ds.feature_dim > d) {
    e_mo_ = Tensor::of(n, d, pca_reduce(ds.features, n, ds.feature_dim, d, cfg_.seed), train_mo);
  } else {
    throw std::invalid_argument("Model: feature dim " + std::to_string(ds.feature_dim) +
                                " is below model dim " + std::to_string(d));
  }
  for (int l = 0; l < cfg_.gcn_layers; ++l) gcn_id_.push_back(init_uniform(d, d, init));
  if (cfg_.gcn_shared) {
    gcn_mo_ = gcn_id_;
  } else {
    for (int l = 0; l < cfg_.gcn_layers; ++l) gcn_mo_.push_back(init_uniform(d, d, init));
  }
  attn_id_ = make_attention(cfg_.dim, init);
  attn_mo_ = make_attention(cfg_.dim, init);
  scorenet_ = make_scorenet(cfg_.dim, init);
  f_theta_ = make_denoiser(cfg_.dim, ns_, init);
  f_psi_ = make_denoiser(cfg_.dim, ns_, init);
  rho_raw_ = Tensor::zeros(1, 1, true);  // sigmoid(0) = 0.5
}

bool Model::modality_active() const {
  return (cfg_.variant == Variant::full || cfg_.variant == Variant::no_fdrq) &&
         data_->feature_dim > 0;
}

bool Model::retrieval_active() const { return cfg_.variant != Variant::no_rad; }

bool Model::feedback_active() const {
  return retrieval_active() && cfg_.variant != Variant::no_fdrq;
}

void Model::refresh_bank() {
  NoGradGuard ng;
  Tensor table = gcn_encode(e_id_, graph_, gcn_id_);
  std::vector<Tensor> rows;
  rows.reserve(data_->train.size());
  std::vector<int> session_of_row(data_->train.size());
  for (std::size_t i = 0; i < data_->train.size(); ++i) {
    rows.push_back(encode_session(data_->train[i].items, table, attn_id_));
    session_of_row[i] = static_cast<int>(i);
  }
  bank_.reps = concat_rows(rows);
  bank_.session_of_row = std::move(session_of_row);
  bank_.epoch_stamp = epoch_;
}

EpochLosses Model::train_epoch() {
  refresh_bank();
  const std::size_t n_ex = train_examples_.size();
  const std::size_t d = static_cast<std::size_t>(cfg_.dim);
  const int k = cfg_.top_k;
  const bool mo = modality_active();
  const bool ret = retrieval_active();
  const bool fb = feedback_active();

  std::vector<std::size_t> order(n_ex);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng_shuffle_.shuffle(order);

  EpochLosses sums;
  for (std::size_t start = 0; start < n_ex; start += static_cast<std::size_t>(cfg_.batch_size)) {
    const std::size_t B = std::min(static_cast<std::size_t>(cfg_.batch_size), n_ex - start);
    std::vector<const PrefixExample*> batch(B);
    for (std::size_t b = 0; b < B; ++b) batch[b] = &train_examples_[order[start + b]];

    // Both channels' graph-enhanced tables once per batch, then the
    // per-prefix attention readouts.
    Tensor table_id = gcn_encode(e_id_, graph_, gcn_id_);
    Tensor table_mo = mo ? gcn_encode(e_mo_, graph_, gcn_mo_) : Tensor();
    std::vector<Tensor> id_rows, mo_rows;
    id_rows.reserve(B);
    std::vector<int> targets(B);
    for (std::size_t b = 0; b < B; ++b) {
      id_rows.push_back(encode_session(batch[b]->prefix, table_id, attn_id_));
      if (mo) mo_rows.push_back(encode_session(batch[b]->prefix, table_mo, attn_mo_));
      targets[b] = batch[b]->target;
    }
    Tensor s_id = concat_rows(id_rows);
    Tensor s_mo = mo ? concat_rows(mo_rows) : Tensor();
    Tensor s_det = s_id.detach();  // denoising target and retrieval query

    std::vector<std::vector<int>> retrieved(B);
    if (ret) {
      BankProjection bp = project_bank(scorenet_, bank_);
      for (std::size_t b = 0; b < B; ++b) {
        std::vector<int> pool = sample_pool(bank_, cfg_.pool_size, rng_pool_, batch[b]->session);
        retrieved[b] = retrieve_topk(s_det.row_ptr(b), scorenet_, bank_, bp, pool, k).rows;
      }
    }

    // One corruption draw per example, shared by the per-neighbor losses and
    // both denoising losses so their comparisons are paired.
    std::vector<int> ts(B);
    Tensor eps = Tensor::zeros(B, d);
    for (std::size_t b = 0; b < B; ++b) {
      ts[b] = rng_diffusion_.range(1, cfg_.diffusion_steps);
      double* row = eps.values().data() + b * d;
      for (std::size_t j = 0; j < d; ++j) row[j] = rng_diffusion_.gaussian();
    }

    Tensor cond;  // generator condition, constant w.r.t. the tape
    Tensor l_r;
    if (ret) {
      // Per-neighbor denoising losses: corrupt the session's own
      // representation, condition on each neighbor alone, gradients off.
      std::vector<double> ld_j(B * static_cast<std::size_t>(k));
      {
        NoGradGuard ng;
        Tensor x_t = q_sample(s_det, ts, eps, ns_);
        std::vector<int> rep_idx(B * static_cast<std::size_t>(k));
        std::vector<int> ts_rep(B * static_cast<std::size_t>(k));
        std::vector<int> flat_rows(B * static_cast<std::size_t>(k));
        for (std::size_t b = 0; b < B; ++b)
          for (int j = 0; j < k; ++j) {
            std::size_t r = b * static_cast<std::size_t>(k) + static_cast<std::size_t>(j);
            rep_idx[r] = static_cast<int>(b);
            ts_rep[r] = ts[b];
            flat_rows[r] = retrieved[b][static_cast<std::size_t>(j)];
          }
        Tensor pred = denoise(f_theta_, gather_rows(x_t, rep_idx),
                              gather_rows(bank_.reps, flat_rows), ts_rep);
        for (std::size_t r = 0; r < ld_j.size(); ++r) {
          const double* p = pred.row_ptr(r);
          const double* t = s_det.row_ptr(static_cast<std::size_t>(rep_idx[r]));
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            double diff = p[j] - t[j];
            acc += diff * diff;
          }
          ld_j[r] = acc / static_cast<double>(d);
        }
      }
      // Softmax weights over the k raw scores; the feedback loss pushes
      // weight toward neighbors the generator denoises well from.
      std::vector<Tensor> cond_rows, lr_terms;
      cond_rows.reserve(B);
      for (std::size_t b = 0; b < B; ++b) {
        Tensor nb = gather_rows(bank_.reps, retrieved[b]);
        Tensor query = gather_rows(s_det, {static_cast<int>(b)});
        Tensor w;
        std::vector<double> losses_b(ld_j.begin() + static_cast<std::ptrdiff_t>(b * k),
                                     ld_j.begin() + static_cast<std::ptrdiff_t>((b + 1) * k));
        if (fb) {
          w = softmax_rows(transpose(score_pairs(scorenet_, query, nb)));
          lr_terms.push_back(feedback_loss(w, losses_b));
        } else {
          NoGradGuard ng;
          w = softmax_rows(transpose(score_pairs(scorenet_, query, nb)));
        }
        NoGradGuard ng;
        cond_rows.push_back(matmul(w, nb));
      }
      cond = concat_rows(cond_rows);
      if (fb) l_r = mean_of(lr_terms);
    } else {
      cond = Tensor::zeros(B, d);
    }

    Tensor l_d, l_s, l_m, l_align, pred_theta;
    {
      DenoiseLossResult dr = denoise_loss(f_theta_, s_det, cond, ts, eps, ns_);
      l_d = dr.loss;
      pred_theta = dr.prediction;
    }
    if (mo) {
      // Same corrupted input, condition switched to the modality channel;
      // gradients reach the modality encoder through the condition.
      DenoiseLossResult dr = denoise_loss(f_psi_, s_det, s_mo, ts, eps, ns_);
      l_s = dr.loss;
      l_m = info_nce(pred_theta, dr.prediction, cfg_.tau);
      if (cfg_.align_weight > 0.0) l_align = align_loss(s_id, s_mo, cfg_.tau);
    }

    // Latent-neighbor generation through the tracked reverse chain, fused
    // into the session representation for scoring.
    Tensor eps_chain = Tensor::zeros(B, d);
    for (double& v : eps_chain.values()) v = rng_diffusion_.gaussian();
    GenResult gen = reverse_generate(
        [&](const Tensor& x, const std::vector<int>& tv) { return denoise(f_theta_, x, cond, tv); },
        s_id, ns_, cfg_.gen_steps, &eps_chain);
    Tensor s_f = fuse(s_id, gen.x0, rho_raw_);
    Tensor l_e = recommendation_loss(score_items(s_f, table_id), targets, cfg_.literal_rec_loss);

    Tensor total =
        total_loss(l_e, l_d, l_r, l_s, l_m, l_align, cfg_.gamma, cfg_.delta, cfg_.align_weight);
    backward(total);
    std::vector<Param> params = trainable_parameters();
    adam_.step(params, cfg_.lr);

    ++sums.batches;
    double w = static_cast<double>(B);
    sums.l_e += l_e.item() * w;
    sums.l_d += l_d.item() * w;
    if (l_r.defined()) sums.l_r += l_r.item() * w;
    if (l_s.defined()) sums.l_s += l_s.item() * w;
    if (l_m.defined()) sums.l_m += l_m.item() * w;
    if (l_align.defined()) sums.l_align += l_align.item() * w;
    sums.total += total.item() * w;
  }

  double inv = 1.0 / static_cast<double>(n_ex);
  sums.l_e *= inv;
  sums.l_d *= inv;
  sums.l_r *= inv;
  sums.l_s *= inv;
  sums.l_m *= inv;
  sums.l_align *= inv;
  sums.total *= inv;
  ++epoch_;
  history_.push_back(sums);
  return sums;
}

EvalReport Model::evaluate() {
  if (test_examples_.empty()) throw std::runtime_error("evaluate: empty test split");
  refresh_bank();
  NoGradGuard ng;
  const std::size_t d = static_cast<std::size_t>(cfg_.dim);
  const std::size_t n_items = data_->vocab.size();
  Rng pool_rng = Rng::substream(cfg_.seed, "eval-pool");
  Tensor table_id = gcn_encode(e_id_, graph_, gcn_id_);
  BankProjection bp = project_bank(scorenet_, bank_);

  std::vector<int> ranks;
  ranks.reserve(test_examples_.size());
  double latent_sum = 0.0, retrieved_sum = 0.0;
  for (const PrefixExample& ex : test_examples_) {
    Tensor s = encode_session(ex.prefix, table_id, attn_id_);
    std::vector<int> pool = sample_pool(bank_, cfg_.pool_size, pool_rng);
    Retrieved rt = retrieve_topk(s.row_ptr(0), scorenet_, bank_, bp, pool, cfg_.top_k);
    Tensor cond;
    if (retrieval_active()) {
      Tensor nb = gather_rows(bank_.reps, rt.rows);
      Tensor w = softmax_rows(transpose(score_pairs(scorenet_, s, nb)));
      cond = matmul(w, nb);
    } else {
      cond = Tensor::zeros(1, d);
    }
    GenResult gen = reverse_generate(
        [&](const Tensor& x, const std::vector<int>& tv) { return denoise(f_theta_, x, cond, tv); },
        s, ns_, cfg_.gen_steps, nullptr);
    Tensor s_f = fuse(s, gen.x0, rho_raw_);
    Tensor scores = score_items(s_f, table_id);
    ranks.push_back(rank_of_target(scores.row_ptr(0), n_items,
                                   static_cast<std::size_t>(ex.target)));
    latent_sum += 1.0 - cosine_or_zero(s.row_ptr(0), gen.x0.row_ptr(0), d);
    retrieved_sum +=
        1.0 - cosine_or_zero(s.row_ptr(0), bank_.reps.row_ptr(static_cast<std::size_t>(rt.rows[0])), d);
  }

  EvalReport rep;
  rep.metrics = metrics_from_ranks(ranks);
  double inv = 1.0 / static_cast<double>(test_examples_.size());
  rep.neighbors.latent_cos_dist = latent_sum * inv;
  rep.neighbors.retrieved_cos_dist = retrieved_sum * inv;
  return rep;
}

std::vector<Param> Model::parameters() {
  std::vector<Param> out;
  out.push_back({"e_id", e_id_});
  out.push_back({"e_mo", e_mo_});
  if (cfg_.gcn_shared) {
    for (std::size_t l = 0; l < gcn_id_.size(); ++l)
      out.push_back({"gcn." + std::to_string(l) + ".w", gcn_id_[l]});
  } else {
    for (std::size_t l = 0; l < gcn_id_.size(); ++l)
      out.push_back({"gcn_id." + std::to_string(l) + ".w", gcn_id_[l]});
    for (std::size_t l = 0; l < gcn_mo_.size(); ++l)
      out.push_back({"gcn_mo." + std::to_string(l) + ".w", gcn_mo_[l]});
  }
  out.push_back({"attn_id.w_last", attn_id_.w_last});
  out.push_back({"attn_id.w_item", attn_id_.w_item});
  out.push_back({"attn_mo.w_last", attn_mo_.w_last});
  out.push_back({"attn_mo.w_item", attn_mo_.w_item});
  out.push_back({"scorenet.w_query", scorenet_.w_query});
  out.push_back({"scorenet.w_cand", scorenet_.w_cand});
  out.push_back({"scorenet.b_hidden", scorenet_.b_hidden});
  out.push_back({"scorenet.w_out", scorenet_.w_out});
  out.push_back({"scorenet.b_out", scorenet_.b_out});
  out.push_back({"f_theta.w_in", f_theta_.w_in});
  out.push_back({"f_theta.b_in", f_theta_.b_in});
  out.push_back({"f_theta.w_out", f_theta_.w_out});
  out.push_back({"f_theta.b_out", f_theta_.b_out});
  out.push_back({"f_psi.w_in", f_psi_.w_in});
  out.push_back({"f_psi.b_in", f_psi_.b_in});
  out.push_back({"f_psi.w_out", f_psi_.w_out});
  out.push_back({"f_psi.b_out", f_psi_.b_out});
  out.push_back({"rho", rho_raw_});
  return out;
}

std::vector<Param> Model::trainable_parameters() {
  std::vector<Param> out;
  out.push_back({"e_id", e_id_});
  if (cfg_.gcn_shared) {
    for (std::size_t l = 0; l < gcn_id_.size(); ++l)
      out.push_back({"gcn." + std::to_string(l) + ".w", gcn_id_[l]});
  } else {
    for (std::size_t l = 0; l < gcn_id_.size(); ++l)
      out.push_back({"gcn_id." + std::to_string(l) + ".w", gcn_id_[l]});
  }
  out.push_back({"attn_id.w_last", attn_id_.w_last});
  out.push_back({"attn_id.w_item", attn_id_.w_item});
  out.push_back({"f_theta.w_in", f_theta_.w_in});
  out.push_back({"f_theta.b_in", f_theta_.b_in});
  out.push_back({"f_theta.w_out", f_theta_.w_out});
  out.push_back({"f_theta.b_out", f_theta_.b_out});
  out.push_back({"rho", rho_raw_});
  if (feedback_active()) {
    out.push_back({"scorenet.w_query", scorenet_.w_query});
    out.push_back({"scorenet.w_cand", scorenet_.w_cand});
    out.push_back({"scorenet.b_hidden", scorenet_.b_hidden});
    out.push_back({"scorenet.w_out", scorenet_.w_out});
    out.push_back({"scorenet.b_out", scorenet_.b_out});
  }
  if (modality_active()) {
    if (!cfg_.freeze_modality) out.push_back({"e_mo", e_mo_});
    if (!cfg_.gcn_shared)
      for (std::size_t l = 0; l < gcn_mo_.size(); ++l)
        out.push_back({"gcn_mo." + std::to_string(l) + ".w", gcn_mo_[l]});
    out.push_back({"attn_mo.w_last", attn_mo_.w_last});
    out.push_back({"attn_mo.w_item", attn_mo_.w_item});
    out.push_back({"f_psi.w_in", f_psi_.w_in});
    out.push_back({"f_psi.b_in", f_psi_.b_in});
    out.push_back({"f_psi.w_out", f_psi_.w_out});
    out.push_back({"f_psi.b_out", f_psi_.b_out});
  }
  return out;
}

void Model::load_parameters(const std::vector<Param>& loaded) {
  std::vector<Param> own = parameters();
  std::unordered_map<std::string, const Param*> by_name;
  for (const Param& p : loaded) {
    if (!by_name.emplace(p.name, &p).second)
      throw std::runtime_error("load_parameters: duplicate name " + p.name);
  }
  if (loaded.size() != own.size())
    throw std::runtime_error("load_parameters: expected " + std::to_string(own.size()) +
                             " parameters, got " + std::to_string(loaded.size()));
  for (Param& p : own) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw std::runtime_error("load_parameters: missing " + p.name);
    const Tensor& src = it->second->tensor;
    if (src.rows() != p.tensor.rows() || src.cols() != p.tensor.cols())
      throw std::runtime_error("load_parameters: shape mismatch for " + p.name);
    p.tensor.values() = src.values();
  }
}

Tensor Model::item_table_id() {
  NoGradGuard ng;
  return gcn_encode(e_id_, graph_, gcn_id_).detach();
}

Tensor Model::item_table_mo() {
  if (data_->feature_dim == 0) return Tensor();
  NoGradGuard ng;
  return gcn_encode(e_mo_, graph_, gcn_mo_).detach();
}

}  // namespace dsbr
