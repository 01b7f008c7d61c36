#include "dsbr/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "dsbr/rng.hpp"

namespace dsbr {

int ItemVocab::add(const std::string& id) {
  auto it = index.find(id);
  if (it != index.end()) return it->second;
  int i = static_cast<int>(items.size());
  items.push_back(id);
  index.emplace(id, i);
  return i;
}

int ItemVocab::lookup(const std::string& id) const {
  auto it = index.find(id);
  return it == index.end() ? -1 : it->second;
}

namespace {

[[noreturn]] void line_error(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

EventLog load_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open session file: " + path);

  struct Raw {
    std::string id;
    std::vector<std::pair<long long, std::string>> events;  // file order
  };
  std::vector<Raw> raw;
  std::unordered_map<std::string, std::size_t> by_id;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos ||
        line.find('\t', t2 + 1) != std::string::npos)
      line_error(path, lineno, "expected 3 tab-separated fields");
    std::string sid = line.substr(0, t1);
    std::string item = line.substr(t1 + 1, t2 - t1 - 1);
    std::string ts_str = line.substr(t2 + 1);
    if (sid.empty() || item.empty()) line_error(path, lineno, "empty session or item id");
    long long ts = 0;
    try {
      std::size_t pos = 0;
      ts = std::stoll(ts_str, &pos);
      if (pos != ts_str.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      line_error(path, lineno, "bad timestamp '" + ts_str + "'");
    }
    auto it = by_id.find(sid);
    if (it == by_id.end()) {
      by_id.emplace(sid, raw.size());
      raw.push_back({sid, {}});
      it = by_id.find(sid);
    }
    raw[it->second].events.emplace_back(ts, std::move(item));
  }

  EventLog log;
  log.sessions.reserve(raw.size());
  for (auto& r : raw) {
    EventLog::Session s;
    s.id = std::move(r.id);
    s.events = std::move(r.events);
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    s.start_ts = s.events.front().first;
    log.sessions.push_back(std::move(s));
  }
  std::stable_sort(log.sessions.begin(), log.sessions.end(),
                   [](const auto& a, const auto& b) { return a.start_ts < b.start_ts; });
  return log;
}

void filter_event_log(EventLog& log, int min_item_occurrences, int min_session_len) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, int> freq;
    for (const auto& s : log.sessions)
      for (const auto& e : s.events) ++freq[e.second];
    for (auto& s : log.sessions) {
      auto kept = std::remove_if(s.events.begin(), s.events.end(), [&](const auto& e) {
        return freq[e.second] < min_item_occurrences;
      });
      if (kept != s.events.end()) {
        s.events.erase(kept, s.events.end());
        changed = true;
      }
    }
    auto kept = std::remove_if(log.sessions.begin(), log.sessions.end(), [&](const auto& s) {
      return static_cast<int>(s.events.size()) < min_session_len;
    });
    if (kept != log.sessions.end()) {
      log.sessions.erase(kept, log.sessions.end());
      changed = true;
    }
  }
  if (log.sessions.empty())
    throw std::runtime_error("filter_event_log: no sessions survive the thresholds");
  for (auto& s : log.sessions) s.start_ts = s.events.front().first;
  std::stable_sort(log.sessions.begin(), log.sessions.end(),
                   [](const auto& a, const auto& b) { return a.start_ts < b.start_ts; });
}

void write_event_log_tsv(const EventLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& s : log.sessions)
    for (const auto& e : s.events)
      out << s.id << '\t' << e.second << '\t' << e.first << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

SessionDataset build_dataset(const EventLog& log, double test_fraction) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("build_dataset: test_fraction must be in [0, 1)");
  SessionDataset ds;
  std::vector<SessionRecord> all;
  all.reserve(log.sessions.size());
  for (const auto& s : log.sessions) {
    SessionRecord rec;
    rec.items.reserve(s.events.size());
    for (const auto& e : s.events) rec.items.push_back(ds.vocab.add(e.second));
    all.push_back(std::move(rec));
  }
  std::size_t n_test =
      static_cast<std::size_t>(std::floor(static_cast<double>(all.size()) * test_fraction));
  std::size_t n_train = all.size() - n_test;
  ds.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return ds;
}

void attach_features(SessionDataset& ds, const FeatureFile& f) {
  if (f.dim == 0) throw std::invalid_argument("attach_features: feature dim is zero");
  std::unordered_map<std::string, std::size_t> row_of;
  row_of.reserve(f.ids.size());
  for (std::size_t i = 0; i < f.ids.size(); ++i) row_of.emplace(f.ids[i], i);
  ds.feature_dim = f.dim;
  ds.features.assign(ds.vocab.size() * f.dim, 0.0);
  ds.zero_filled_features = 0;
  for (std::size_t v = 0; v < ds.vocab.size(); ++v) {
    auto it = row_of.find(ds.vocab.items[v]);
    if (it == row_of.end()) {
      ++ds.zero_filled_features;
      continue;
    }
    std::copy_n(f.data.data() + it->second * f.dim, f.dim, ds.features.data() + v * f.dim);
  }
}

std::vector<PrefixExample> all_prefix_examples(const std::vector<SessionRecord>& sessions) {
  std::vector<PrefixExample> out;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& items = sessions[s].items;
    for (std::size_t i = 1; i < items.size(); ++i) {
      PrefixExample ex;
      ex.prefix.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(i));
      ex.target = items[i];
      ex.session = static_cast<int>(s);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<PrefixExample> final_item_examples(const std::vector<SessionRecord>& sessions) {
  std::vector<PrefixExample> out;
  out.reserve(sessions.size());
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& items = sessions[s].items;
    if (items.size() < 2)
      throw std::invalid_argument("final_item_examples: session shorter than 2 items");
    PrefixExample ex;
    ex.prefix.assign(items.begin(), items.end() - 1);
    ex.target = items.back();
    ex.session = static_cast<int>(s);
    out.push_back(std::move(ex));
  }
  return out;
}

DatasetStats dataset_stats(const SessionDataset& ds) {
  DatasetStats st;
  st.items = ds.vocab.size();
  st.train_sessions = ds.train.size();
  st.test_sessions = ds.test.size();
  st.sessions = st.train_sessions + st.test_sessions;
  for (const auto& s : ds.train) st.interactions += s.items.size();
  for (const auto& s : ds.test) st.interactions += s.items.size();
  st.avg_session_length =
      st.sessions == 0 ? 0.0
                       : static_cast<double>(st.interactions) / static_cast<double>(st.sessions);
  st.zero_filled_features = ds.zero_filled_features;
  return st;
}

SynthData synth_sessions(const SynthConfig& cfg) {
  if (cfg.n_clusters < 1 || cfg.items_per_cluster < 1 || cfg.n_sessions < 1)
    throw std::invalid_argument("synth_sessions: counts must be positive");
  if (cfg.session_len < 2)
    throw std::invalid_argument("synth_sessions: session_len must be at least 2");
  if (cfg.leak_prob < 0.0 || cfg.leak_prob > 1.0)
    throw std::invalid_argument("synth_sessions: leak_prob must be in [0, 1]");
  if (cfg.leak_prob > 0.0 && cfg.n_clusters < 2)
    throw std::invalid_argument("synth_sessions: leaking requires at least 2 clusters");
  if (cfg.feature_dim < 1)
    throw std::invalid_argument("synth_sessions: feature_dim must be positive");

  int n_items = cfg.n_clusters * cfg.items_per_cluster;
  Rng rng = Rng::substream(cfg.seed, "synth");

  std::vector<double> centroids(static_cast<std::size_t>(cfg.n_clusters) *
                                static_cast<std::size_t>(cfg.feature_dim));
  for (double& v : centroids) v = rng.gaussian();

  SynthData out;
  out.features.dim = static_cast<std::size_t>(cfg.feature_dim);
  out.features.ids.reserve(static_cast<std::size_t>(n_items));
  out.features.data.resize(static_cast<std::size_t>(n_items) * out.features.dim);
  for (int i = 0; i < n_items; ++i) {
    out.features.ids.push_back("i" + std::to_string(i));
    int c = i / cfg.items_per_cluster;
    const double* cen = centroids.data() + static_cast<std::size_t>(c) * out.features.dim;
    double* row = out.features.data.data() + static_cast<std::size_t>(i) * out.features.dim;
    for (std::size_t j = 0; j < out.features.dim; ++j) row[j] = cen[j] + 0.1 * rng.gaussian();
  }

  // Recurring intents: each cluster carries a fixed pool of scripted item
  // sequences (one script per catalog item), and sessions replay a script, so
  // sessions sharing an intent share their continuation — planted structure
  // that neighbor retrieval can exploit. The pool is balanced: every item
  // fills exactly one final slot and session_len-1 earlier slots, so item and
  // target marginals stay uniform and popularity alone predicts nothing.
  const int n_scripts = cfg.items_per_cluster;
  std::vector<int> scripts(static_cast<std::size_t>(cfg.n_clusters) *
                           static_cast<std::size_t>(n_scripts) *
                           static_cast<std::size_t>(cfg.session_len));
  {
    std::vector<int> finals(static_cast<std::size_t>(n_scripts));
    std::vector<int> pool(static_cast<std::size_t>(n_scripts) *
                          static_cast<std::size_t>(cfg.session_len - 1));
    for (int c = 0; c < cfg.n_clusters; ++c) {
      for (int i = 0; i < n_scripts; ++i) finals[static_cast<std::size_t>(i)] = i;
      rng.shuffle(finals);
      std::size_t w = 0;
      for (int i = 0; i < n_scripts; ++i)
        for (int r = 0; r + 1 < cfg.session_len; ++r) pool[w++] = i;
      rng.shuffle(pool);
      int* row = scripts.data() + static_cast<std::size_t>(c) *
                                      static_cast<std::size_t>(n_scripts) *
                                      static_cast<std::size_t>(cfg.session_len);
      for (int sc = 0; sc < n_scripts; ++sc) {
        for (int p = 0; p + 1 < cfg.session_len; ++p)
          *row++ = c * cfg.items_per_cluster +
                   pool[static_cast<std::size_t>(sc) * static_cast<std::size_t>(cfg.session_len - 1) +
                        static_cast<std::size_t>(p)];
        *row++ = c * cfg.items_per_cluster + finals[static_cast<std::size_t>(sc)];
      }
    }
  }

  out.log.sessions.reserve(static_cast<std::size_t>(cfg.n_sessions));
  for (int s = 0; s < cfg.n_sessions; ++s) {
    EventLog::Session sess;
    sess.id = "s" + std::to_string(s);
    int home = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_clusters)));
    int script = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_scripts)));
    const int* base = scripts.data() +
                      (static_cast<std::size_t>(home) * static_cast<std::size_t>(n_scripts) +
                       static_cast<std::size_t>(script)) *
                          static_cast<std::size_t>(cfg.session_len);
    for (int p = 0; p < cfg.session_len; ++p) {
      // Every position may leak out of cluster except the final one: the
      // prediction target always comes from the session's own cluster.
      bool can_leak = p + 1 < cfg.session_len;
      int item = base[p];
      if (can_leak && cfg.leak_prob > 0.0 && rng.uniform() < cfg.leak_prob) {
        int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_clusters - 1)));
        int cluster = other < home ? other : other + 1;
        item = cluster * cfg.items_per_cluster +
               static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.items_per_cluster)));
      }
      long long ts = static_cast<long long>(s) * 1000 + p;
      sess.events.emplace_back(ts, "i" + std::to_string(item));
    }
    sess.start_ts = sess.events.front().first;
    out.log.sessions.push_back(std::move(sess));
  }
  return out;
}

SessionDataset synth_dataset(const SynthConfig& cfg, double test_fraction) {
  SynthData data = synth_sessions(cfg);
  SessionDataset ds;
  // Vocabulary covers every generated item, session-visited or not, so the
  // feature table and embedding tables align with the generator's layout.
  for (const auto& id : data.features.ids) ds.vocab.add(id);
  std::vector<SessionRecord> all;
  all.reserve(data.log.sessions.size());
  for (const auto& s : data.log.sessions) {
    SessionRecord rec;
    rec.items.reserve(s.events.size());
    for (const auto& e : s.events) rec.items.push_back(ds.vocab.lookup(e.second));
    all.push_back(std::move(rec));
  }
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("synth_dataset: test_fraction must be in [0, 1)");
  std::size_t n_test =
      static_cast<std::size_t>(std::floor(static_cast<double>(all.size()) * test_fraction));
  std::size_t n_train = all.size() - n_test;
  ds.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  attach_features(ds, data.features);
  return ds;
}

}  // namespace dsbr
