#include "dsbr/config.hpp"

#include <nlohmann/json.hpp>

namespace dsbr {

using nlohmann::ordered_json;

std::string config_json(const RunConfig& cfg) {
  ordered_json j;
  j["dim"] = cfg.model.dim;
  j["gcn_layers"] = cfg.model.gcn_layers;
  j["tau"] = cfg.model.tau;
  j["diffusion_steps"] = cfg.model.diffusion_steps;
  j["gen_steps"] = cfg.model.gen_steps;
  j["beta_min"] = cfg.model.beta_min;
  j["beta_max"] = cfg.model.beta_max;
  j["top_k"] = cfg.model.top_k;
  j["pool_size"] = cfg.model.pool_size;
  j["gamma"] = cfg.model.gamma;
  j["delta"] = cfg.model.delta;
  j["align_weight"] = cfg.model.align_weight;
  j["lr"] = cfg.model.lr;
  j["batch"] = cfg.model.batch_size;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.model.seed;
  j["variant"] = variant_name(cfg.model.variant);
  j["rec_loss"] = cfg.model.literal_rec_loss ? "literal" : "softmax";
  j["freeze_modality"] = cfg.model.freeze_modality;
  j["gcn_shared"] = cfg.model.gcn_shared;
  j["self_loops"] = cfg.model.graph_self_loops;
  j["test_fraction"] = cfg.test_fraction;
  j["min_item_occurrences"] = cfg.min_item_occurrences;
  j["min_session_len"] = cfg.min_session_len;
  j["sknn"] = cfg.run_sknn;
  j["sknn_k"] = cfg.sknn_k;
  j["synth"] = {{"clusters", cfg.synth.n_clusters},
                {"items_per_cluster", cfg.synth.items_per_cluster},
                {"n_sessions", cfg.synth.n_sessions},
                {"session_len", cfg.synth.session_len},
                {"leak_prob", cfg.synth.leak_prob},
                {"feature_dim", cfg.synth.feature_dim}};
  j["paths"] = {{"sessions", cfg.sessions_path},
                {"features", cfg.features_path},
                {"checkpoint", cfg.checkpoint_path},
                {"out", cfg.out_dir}};
  return j.dump();
}

namespace {

template <typename T>
void pick(const nlohmann::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

void config_from_json(const std::string& json_text, RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  pick(j, "dim", cfg.model.dim);
  pick(j, "gcn_layers", cfg.model.gcn_layers);
  pick(j, "tau", cfg.model.tau);
  pick(j, "diffusion_steps", cfg.model.diffusion_steps);
  pick(j, "gen_steps", cfg.model.gen_steps);
  pick(j, "beta_min", cfg.model.beta_min);
  pick(j, "beta_max", cfg.model.beta_max);
  pick(j, "top_k", cfg.model.top_k);
  pick(j, "pool_size", cfg.model.pool_size);
  pick(j, "gamma", cfg.model.gamma);
  pick(j, "delta", cfg.model.delta);
  pick(j, "align_weight", cfg.model.align_weight);
  pick(j, "lr", cfg.model.lr);
  pick(j, "batch", cfg.model.batch_size);
  pick(j, "epochs", cfg.epochs);
  pick(j, "seed", cfg.model.seed);
  if (j.contains("variant")) cfg.model.variant = parse_variant(j.at("variant").get<std::string>());
  if (j.contains("rec_loss")) {
    std::string mode = j.at("rec_loss").get<std::string>();
    if (mode != "softmax" && mode != "literal")
      throw std::invalid_argument("rec_loss must be 'softmax' or 'literal', got '" + mode + "'");
    cfg.model.literal_rec_loss = mode == "literal";
  }
  pick(j, "freeze_modality", cfg.model.freeze_modality);
  pick(j, "gcn_shared", cfg.model.gcn_shared);
  pick(j, "self_loops", cfg.model.graph_self_loops);
  pick(j, "test_fraction", cfg.test_fraction);
  pick(j, "min_item_occurrences", cfg.min_item_occurrences);
  pick(j, "min_session_len", cfg.min_session_len);
  pick(j, "sknn", cfg.run_sknn);
  pick(j, "sknn_k", cfg.sknn_k);
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    pick(s, "clusters", cfg.synth.n_clusters);
    pick(s, "items_per_cluster", cfg.synth.items_per_cluster);
    pick(s, "n_sessions", cfg.synth.n_sessions);
    pick(s, "session_len", cfg.synth.session_len);
    pick(s, "leak_prob", cfg.synth.leak_prob);
    pick(s, "feature_dim", cfg.synth.feature_dim);
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    pick(p, "sessions", cfg.sessions_path);
    pick(p, "features", cfg.features_path);
    pick(p, "checkpoint", cfg.checkpoint_path);
    pick(p, "out", cfg.out_dir);
  }
}

}  // namespace dsbr
