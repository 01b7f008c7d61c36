#include "dsbr/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dsbr/checkpoint.hpp"
#include "dsbr/config.hpp"
#include "dsbr/data.hpp"
#include "dsbr/model.hpp"
#include "dsbr/sknn.hpp"

namespace dsbr {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

fs::path out_path(const RunConfig& rc, const std::string& file) {
  fs::create_directories(rc.out_dir);
  return fs::path(rc.out_dir) / file;
}

SessionDataset load_dataset(const RunConfig& rc) {
  require(!rc.sessions_path.empty(), "this command needs --sessions <tsv>");
  EventLog log = load_event_log(rc.sessions_path);
  filter_event_log(log, rc.min_item_occurrences, rc.min_session_len);
  SessionDataset ds = build_dataset(log, rc.test_fraction);
  if (!rc.features_path.empty()) attach_features(ds, load_features(rc.features_path));
  return ds;
}

ordered_json losses_to_json(const std::vector<EpochLosses>& history) {
  auto arr = ordered_json::array();
  for (const EpochLosses& h : history)
    arr.push_back({{"l_e", h.l_e},
                   {"l_d", h.l_d},
                   {"l_r", h.l_r},
                   {"l_s", h.l_s},
                   {"l_m", h.l_m},
                   {"l_align", h.l_align},
                   {"total", h.total}});
  return arr;
}

ordered_json metrics_to_json(const RunConfig& rc, const ordered_json& losses,
                             const EvalReport& rep) {
  ordered_json j;
  j["variant"] = variant_name(rc.model.variant);
  j["seed"] = rc.model.seed;
  j["epochs"] = losses.size();
  j["p_at"] = {{"10", rep.metrics.p10}, {"20", rep.metrics.p20}};
  j["mrr_at"] = {{"10", rep.metrics.mrr10}, {"20", rep.metrics.mrr20}};
  j["losses"] = losses;
  j["neighbors"] = {{"latent_cos_dist", rep.neighbors.latent_cos_dist},
                    {"retrieved_cos_dist", rep.neighbors.retrieved_cos_dist}};
  return j;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  auto dots = text.find("..");
  if (dots != std::string::npos) {
    std::uint64_t lo = std::stoull(text.substr(0, dots));
    std::uint64_t hi = std::stoull(text.substr(dots + 2));
    if (hi < lo) throw std::runtime_error("--seeds range must be ascending: " + text);
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  } else {
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw std::runtime_error("--seeds is empty");
  return seeds;
}

std::vector<Variant> parse_variants(const std::string& text) {
  std::vector<Variant> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(parse_variant(tok));
  if (out.empty()) throw std::runtime_error("--variants is empty");
  return out;
}

int cmd_prepare(const RunConfig& rc) {
  require(!rc.sessions_path.empty(), "prepare needs --sessions <tsv>");
  EventLog log = load_event_log(rc.sessions_path);
  filter_event_log(log, rc.min_item_occurrences, rc.min_session_len);
  write_event_log_tsv(log, out_path(rc, "filtered.tsv").string());
  SessionDataset ds = build_dataset(log, rc.test_fraction);
  if (!rc.features_path.empty()) attach_features(ds, load_features(rc.features_path));
  DatasetStats st = dataset_stats(ds);
  ordered_json j;
  j["items"] = st.items;
  j["interactions"] = st.interactions;
  j["sessions"] = st.sessions;
  j["avg_length"] = st.avg_session_length;
  j["zero_filled_rows"] = st.zero_filled_features;
  j["config"] = ordered_json::parse(config_json(rc));
  write_text(out_path(rc, "stats.json"), j.dump(2) + "\n");
  std::cout << "items " << st.items << ", sessions " << st.sessions << ", interactions "
            << st.interactions << ", avg length " << st.avg_session_length << "\n";
  return 0;
}

int cmd_synth(RunConfig rc) {
  rc.synth.seed = rc.model.seed;
  SynthData sd = synth_sessions(rc.synth);
  write_event_log_tsv(sd.log, out_path(rc, "sessions.tsv").string());
  save_features(out_path(rc, "features.bin").string(), sd.features);
  ordered_json j;
  j["items"] = sd.features.ids.size();
  j["sessions"] = sd.log.sessions.size();
  j["config"] = ordered_json::parse(config_json(rc));
  write_text(out_path(rc, "synth.json"), j.dump(2) + "\n");
  std::cout << "wrote " << sd.log.sessions.size() << " sessions over " << sd.features.ids.size()
            << " items\n";
  return 0;
}

int cmd_train(const RunConfig& rc) {
  SessionDataset ds = load_dataset(rc);
  Model model(rc.model, ds);
  for (int e = 0; e < rc.epochs; ++e) {
    EpochLosses l = model.train_epoch();
    std::cout << "epoch " << e + 1 << "/" << rc.epochs << "  total " << l.total << "  l_e "
              << l.l_e << "\n";
  }
  ordered_json run = ordered_json::parse(config_json(rc));
  run["history"] = losses_to_json(model.history());
  save_checkpoint(out_path(rc, "checkpoint.bin").string(), model.parameters(), run.dump());
  std::ostringstream csv;
  csv << "epoch,l_e,l_d,l_r,l_s,l_m,l_align,total\n";
  for (std::size_t i = 0; i < model.history().size(); ++i) {
    const EpochLosses& h = model.history()[i];
    csv << i + 1 << ',' << fmt(h.l_e) << ',' << fmt(h.l_d) << ',' << fmt(h.l_r) << ','
        << fmt(h.l_s) << ',' << fmt(h.l_m) << ',' << fmt(h.l_align) << ',' << fmt(h.total)
        << "\n";
  }
  write_text(out_path(rc, "curves.csv"), csv.str());
  return 0;
}

// The checkpoint sidecar fixes the model and data-preparation config (the
// stored tensors and vocabulary indices depend on them); the invocation only
// chooses paths, the output directory, and the baseline comparison.
RunConfig restore_run(const RunConfig& rc) {
  require(!rc.checkpoint_path.empty(), "this command needs --checkpoint <file>");
  RunConfig eff;
  std::string run_json = load_checkpoint_run_json(rc.checkpoint_path);
  if (!run_json.empty()) config_from_json(run_json, eff);
  if (!rc.sessions_path.empty()) eff.sessions_path = rc.sessions_path;
  if (!rc.features_path.empty()) eff.features_path = rc.features_path;
  eff.checkpoint_path = rc.checkpoint_path;
  eff.out_dir = rc.out_dir;
  eff.run_sknn = rc.run_sknn;
  eff.sknn_k = rc.sknn_k;
  return eff;
}

int cmd_evaluate(const RunConfig& invocation) {
  RunConfig rc = restore_run(invocation);
  SessionDataset ds = load_dataset(rc);
  Model model(rc.model, ds);
  model.load_parameters(load_checkpoint(rc.checkpoint_path));
  EvalReport rep = model.evaluate();

  std::string run_json = load_checkpoint_run_json(rc.checkpoint_path);
  ordered_json run = run_json.empty() ? ordered_json::object() : ordered_json::parse(run_json);
  ordered_json losses = run.contains("history") ? run["history"] : ordered_json::array();
  ordered_json j = metrics_to_json(rc, losses, rep);
  if (rc.run_sknn) {
    RankingMetrics sk =
        sknn_evaluate(ds.train, final_item_examples(ds.test),
                      static_cast<int>(ds.vocab.size()), rc.sknn_k);
    j["sknn"] = {{"k_nn", rc.sknn_k},
                 {"p_at", {{"10", sk.p10}, {"20", sk.p20}}},
                 {"mrr_at", {{"10", sk.mrr10}, {"20", sk.mrr20}}}};
  }
  j["config"] = ordered_json::parse(config_json(rc));
  write_text(out_path(rc, "metrics.json"), j.dump(2) + "\n");
  std::cout << "P@10 " << rep.metrics.p10 << "  P@20 " << rep.metrics.p20 << "  MRR@10 "
            << rep.metrics.mrr10 << "  MRR@20 " << rep.metrics.mrr20 << "\n";
  return 0;
}

int cmd_export(const RunConfig& invocation) {
  RunConfig rc = restore_run(invocation);
  SessionDataset ds = load_dataset(rc);
  Model model(rc.model, ds);
  model.load_parameters(load_checkpoint(rc.checkpoint_path));
  std::vector<Param> dump;
  dump.push_back({"E_id", model.item_table_id()});
  Tensor mo = model.item_table_mo();
  if (mo.defined()) dump.push_back({"E_mo", mo});
  save_checkpoint(out_path(rc, "embeddings.bin").string(), dump, config_json(rc));
  std::cout << "exported " << dump.size() << (dump.size() == 1 ? " table\n" : " tables\n");
  return 0;
}

int cmd_ablate(const RunConfig& rc, const std::string& variants_text,
               const std::string& seeds_text) {
  std::vector<Variant> variants = parse_variants(variants_text);
  std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
  SessionDataset ds = load_dataset(rc);
  std::ostringstream csv;
  csv << "variant,seed,p10,p20,mrr10,mrr20\n";
  for (Variant v : variants) {
    ordered_json vj;
    vj["variant"] = variant_name(v);
    vj["epochs"] = rc.epochs;
    auto runs = ordered_json::array();
    double p10 = 0.0, p20 = 0.0, mrr10 = 0.0, mrr20 = 0.0;
    for (std::uint64_t s : seeds) {
      RunConfig r = rc;
      r.model.variant = v;
      r.model.seed = s;
      Model model(r.model, ds);
      for (int e = 0; e < r.epochs; ++e) model.train_epoch();
      EvalReport rep = model.evaluate();
      runs.push_back(metrics_to_json(r, losses_to_json(model.history()), rep));
      csv << variant_name(v) << ',' << s << ',' << fmt(rep.metrics.p10) << ','
          << fmt(rep.metrics.p20) << ',' << fmt(rep.metrics.mrr10) << ','
          << fmt(rep.metrics.mrr20) << "\n";
      p10 += rep.metrics.p10;
      p20 += rep.metrics.p20;
      mrr10 += rep.metrics.mrr10;
      mrr20 += rep.metrics.mrr20;
      std::cout << variant_name(v) << " seed " << s << "  P@10 " << rep.metrics.p10 << "\n";
    }
    double inv = 1.0 / static_cast<double>(seeds.size());
    vj["runs"] = runs;
    vj["mean"] = {{"p10", p10 * inv},
                  {"p20", p20 * inv},
                  {"mrr10", mrr10 * inv},
                  {"mrr20", mrr20 * inv}};
    RunConfig r = rc;
    r.model.variant = v;
    vj["config"] = ordered_json::parse(config_json(r));
    write_text(out_path(rc, "metrics_" + variant_name(v) + ".json"), vj.dump(2) + "\n");
  }
  write_text(out_path(rc, "comparison.csv"), csv.str());
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  RunConfig rc;
  std::string variant_text = "full";
  std::string rec_loss_text = "softmax";
  std::string variants_text = "full,no-RAD,no-FDRQ,no-SAD";
  std::string seeds_text = "1..5";

  CLI::App app{"diffusion-augmented session recommender"};
  app.set_config("--config", "", "key=value file of the options below; flags win");
  app.require_subcommand(1);

  auto* seed_opt = app.add_option("--seed", rc.model.seed, "root seed (DSBR_SEED as fallback)");
  app.add_option("--dim", rc.model.dim, "embedding width d");
  app.add_option("--gcn-layers", rc.model.gcn_layers, "graph propagation layers L");
  app.add_option("--tau", rc.model.tau, "contrastive temperature");
  app.add_option("--diffusion-steps", rc.model.diffusion_steps, "schedule length T");
  app.add_option("--gen-steps", rc.model.gen_steps, "generation corruption level T'");
  app.add_option("--beta-min", rc.model.beta_min, "schedule start");
  app.add_option("--beta-max", rc.model.beta_max, "schedule end (truncated linear)");
  app.add_option("--top-k", rc.model.top_k, "retrieved neighbors per query");
  app.add_option("--pool-size", rc.model.pool_size, "candidate pool per query");
  app.add_option("--gamma", rc.model.gamma, "diffusion-loss weight");
  app.add_option("--delta", rc.model.delta, "contrastive weight");
  app.add_option("--align-weight", rc.model.align_weight, "cross-channel alignment weight");
  app.add_option("--lr", rc.model.lr, "adam learning rate");
  app.add_option("--batch", rc.model.batch_size, "mini-batch size");
  app.add_option("--epochs", rc.epochs, "training epochs");
  app.add_option("--variant", variant_text, "full | no-RAD | no-FDRQ | no-SAD")
      ->check(CLI::IsMember({"full", "no-RAD", "no-FDRQ", "no-SAD"}));
  app.add_option("--rec-loss", rec_loss_text, "softmax | literal")
      ->check(CLI::IsMember({"softmax", "literal"}));
  app.add_flag("--freeze-modality", rc.model.freeze_modality,
               "keep the feature table at its initialization");
  app.add_flag("--gcn-shared", rc.model.gcn_shared, "one propagation stack for both channels");
  app.add_flag("--self-loops", rc.model.graph_self_loops,
               "unit self-edge for items with no outgoing transition");
  app.add_option("--test-fraction", rc.test_fraction, "temporal holdout fraction");
  app.add_option("--min-item-occurrences", rc.min_item_occurrences, "item frequency floor");
  app.add_option("--min-session-len", rc.min_session_len, "session length floor");
  app.add_flag("--sknn", rc.run_sknn, "add the session-kNN baseline to evaluate output");
  app.add_option("--sknn-k", rc.sknn_k, "session-kNN neighborhood size");
  app.add_option("--clusters", rc.synth.n_clusters, "synth: item clusters");
  app.add_option("--items-per-cluster", rc.synth.items_per_cluster, "synth: cluster size");
  app.add_option("--n-sessions", rc.synth.n_sessions, "synth: session count");
  app.add_option("--session-len", rc.synth.session_len, "synth: items per session");
  app.add_option("--leak-prob", rc.synth.leak_prob, "synth: out-of-cluster probability");
  app.add_option("--feature-dim", rc.synth.feature_dim, "synth: feature width");
  app.add_option("--sessions", rc.sessions_path, "session TSV path");
  app.add_option("--features", rc.features_path, "item feature file path");
  app.add_option("--checkpoint", rc.checkpoint_path, "trained checkpoint path");
  app.add_option("--out", rc.out_dir, "output directory")->capture_default_str();

  CLI::App* prepare = app.add_subcommand("prepare", "filter a session log, report stats");
  CLI::App* synth = app.add_subcommand("synth", "generate the clustered synthetic benchmark");
  CLI::App* train = app.add_subcommand("train", "train a model, write checkpoint + curves");
  CLI::App* evaluate = app.add_subcommand("evaluate", "rank the held-out targets");
  CLI::App* ablate = app.add_subcommand("ablate", "train/evaluate a variant x seed grid");
  CLI::App* exp = app.add_subcommand("export", "dump graph-enhanced item tables");
  for (CLI::App* sub : {prepare, synth, train, evaluate, ablate, exp}) sub->fallthrough();
  ablate->add_option("--variants", variants_text, "comma list of variants");
  ablate->add_option("--seeds", seeds_text, "comma list or lo..hi range");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!seed_opt->count())
      if (const char* env = std::getenv("DSBR_SEED"))
        rc.model.seed = std::strtoull(env, nullptr, 10);
    rc.model.variant = parse_variant(variant_text);
    rc.model.literal_rec_loss = rec_loss_text == "literal";

    if (app.got_subcommand(prepare)) return cmd_prepare(rc);
    if (app.got_subcommand(synth)) return cmd_synth(rc);
    if (app.got_subcommand(train)) return cmd_train(rc);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(rc);
    if (app.got_subcommand(ablate)) return cmd_ablate(rc, variants_text, seeds_text);
    if (app.got_subcommand(exp)) return cmd_export(rc);
    throw std::runtime_error("no command selected");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dsbr
