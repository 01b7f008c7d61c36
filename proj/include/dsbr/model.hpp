#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsbr/adam.hpp"
#include "dsbr/data.hpp"
#include "dsbr/diffusion.hpp"
#include "dsbr/encoder.hpp"
#include "dsbr/graph.hpp"
#include "dsbr/metrics.hpp"
#include "dsbr/retriever.hpp"
#include "dsbr/rng.hpp"
#include "dsbr/tensor.hpp"

namespace dsbr {

// full      — everything on.
// no-RAD    — generator condition is the zero vector; retrieval, modality
//             channel, and the L_r/L_s/L_m/align terms are off.
// no-FDRQ   — L_r off only: retrieval still conditions the generator, but
//             the scorer keeps its initialization.
// no-SAD    — modality channel off: L_s/L_m/align dropped, retrieval kept.
enum class Variant { full, no_rad, no_fdrq, no_sad };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct ModelConfig {
  int dim = 100;
  int gcn_layers = 3;
  double tau = 0.3;
  int diffusion_steps = 32;  // T
  int gen_steps = 16;        // T', corruption level for generation
  double beta_min = 1e-4;
  double beta_max = 0.1;
  int top_k = 3;        // retrieved neighbors per query
  int pool_size = 512;  // candidate pool per query
  double gamma = 7.0;
  double delta = 0.05;
  double align_weight = 0.1;
  double lr = 0.001;
  int batch_size = 50;
  std::uint64_t seed = 42;
  Variant variant = Variant::full;
  bool literal_rec_loss = false;  // summed binary form instead of softmax CE
  bool freeze_modality = false;   // keep E_mo at its feature initialization
  bool gcn_shared = false;        // one layer stack serving both channels
  bool graph_self_loops = false;  // unit self-edge for items with no out-edges
};

struct EpochLosses {
  double l_e = 0.0, l_d = 0.0, l_r = 0.0, l_s = 0.0, l_m = 0.0, l_align = 0.0;
  double total = 0.0;
  int batches = 0;
};

struct NeighborDiagnostics {
  double latent_cos_dist = 0.0;     // mean 1 - cos(session rep, generated neighbor)
  double retrieved_cos_dist = 0.0;  // mean 1 - cos(session rep, top-1 bank row)
};

struct EvalReport {
  RankingMetrics metrics;
  NeighborDiagnostics neighbors;
};

// s_f = rho * s_id + (1 - rho) * s_n0 with rho = sigmoid(rho_raw), so the
// mix stays inside (0, 1) under unconstrained optimization.
Tensor fuse(const Tensor& s_id, const Tensor& s_n0, const Tensor& rho_raw);

// Dot product of the fused representation(s) against every item row.
Tensor score_items(const Tensor& s_f, const Tensor& item_table);

// Softmax cross-entropy against the target column (default), or the summed
// binary form over the softmax vector (literal mode). Batch mean.
Tensor recommendation_loss(const Tensor& scores, const std::vector<int>& targets,
                           bool literal = false);

// L = L_e + gamma * (L_d + L_r + L_s) + delta * L_m + align_weight * L_align.
// Undefined tensors drop their term.
Tensor total_loss(const Tensor& l_e, const Tensor& l_d, const Tensor& l_r, const Tensor& l_s,
                  const Tensor& l_m, const Tensor& l_align, double gamma, double delta,
                  double align_weight);

class Model {
 public:
  Model(ModelConfig cfg, const SessionDataset& ds);

  // One pass over the shuffled prefix-augmented training examples; refreshes
  // the session bank first. Returns example-weighted mean losses.
  EpochLosses train_epoch();

  // Deterministic: noiseless generation, pool sampling from a fresh
  // seed-derived stream, bank rebuilt from current parameters.
  EvalReport evaluate();

  const std::vector<EpochLosses>& history() const { return history_; }
  const ModelConfig& config() const { return cfg_; }
  const CoGraph& graph() const { return graph_; }
  std::size_t train_example_count() const { return train_examples_.size(); }
  std::size_t test_example_count() const { return test_examples_.size(); }

  // Every parameter in a stable order, shared handles (not copies).
  std::vector<Param> parameters();
  // The subset the active variant trains.
  std::vector<Param> trainable_parameters();
  // Strict by-name restore; shapes must match.
  void load_parameters(const std::vector<Param>& loaded);

  // Graph-enhanced item tables under current parameters, detached.
  Tensor item_table_id();
  Tensor item_table_mo();  // undefined tensor when the dataset has no features

 private:
  bool modality_active() const;   // channel participates in training
  bool retrieval_active() const;  // neighbors condition the generator
  bool feedback_active() const;   // L_r trains the scorer

  void refresh_bank();

  ModelConfig cfg_;
  const SessionDataset* data_;
  CoGraph graph_;
  NoiseSchedule ns_;

  Tensor e_id_, e_mo_;
  std::vector<Tensor> gcn_id_, gcn_mo_;
  AttentionParams attn_id_, attn_mo_;
  ScoreNet scorenet_;
  Denoiser f_theta_;  // retrieval-conditioned generator
  Denoiser f_psi_;    // modality-conditioned generator
  Tensor rho_raw_;

  std::vector<PrefixExample> train_examples_, test_examples_;
  AdamOptimizer adam_;
  SessionBank bank_;
  Rng rng_shuffle_, rng_diffusion_, rng_pool_;
  std::vector<EpochLosses> history_;
  int epoch_ = 0;
};

}  // namespace dsbr
