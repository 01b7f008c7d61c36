#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsbr/checkpoint.hpp"

namespace dsbr {

struct SessionRecord {
  std::vector<int> items;  // vocabulary indices, interaction order
};

struct ItemVocab {
  std::vector<std::string> items;             // index -> external id
  std::unordered_map<std::string, int> index; // external id -> index

  int add(const std::string& id);
  int lookup(const std::string& id) const;  // -1 when absent
  std::size_t size() const { return items.size(); }
};

// Parsed interaction log, still in external ids. Sessions are ordered by
// (start timestamp, first appearance in the file); events inside a session
// by (timestamp, file order).
struct EventLog {
  struct Session {
    std::string id;
    std::vector<std::pair<long long, std::string>> events;  // (ts, item id)
    long long start_ts = 0;
  };
  std::vector<Session> sessions;
};

// Reads `session_id \t item_id \t timestamp` lines. Blank lines are
// skipped; anything else malformed raises with its 1-based line number.
EventLog load_event_log(const std::string& path);

// Drops items occurring fewer than min_item_occurrences times across all
// sessions and sessions shorter than min_session_len, repeating both steps
// until the log stops changing.
void filter_event_log(EventLog& log, int min_item_occurrences = 5, int min_session_len = 2);

void write_event_log_tsv(const EventLog& log, const std::string& path);

struct SessionDataset {
  ItemVocab vocab;
  std::vector<SessionRecord> train;
  std::vector<SessionRecord> test;
  std::size_t feature_dim = 0;   // 0 until features attached
  std::vector<double> features;  // vocab.size() x feature_dim
  std::size_t zero_filled_features = 0;
};

// Encodes items against a vocabulary built in first-appearance order and
// splits temporally: the last floor(n * test_fraction) sessions by start
// time become the test split.
SessionDataset build_dataset(const EventLog& log, double test_fraction);

// Joins features by external id; vocabulary items missing from the file
// get zero rows, counted in zero_filled_features. Ids in the file that are
// not in the vocabulary are ignored.
void attach_features(SessionDataset& ds, const FeatureFile& f);

struct PrefixExample {
  std::vector<int> prefix;
  int target = -1;
  int session = -1;  // index into the originating split
};

// Training augmentation: every strict prefix predicts the item after it, so
// a length-m session yields m-1 examples.
std::vector<PrefixExample> all_prefix_examples(const std::vector<SessionRecord>& sessions);

// Evaluation form: everything but the last item predicts the last item.
std::vector<PrefixExample> final_item_examples(const std::vector<SessionRecord>& sessions);

struct DatasetStats {
  std::size_t items = 0;
  std::size_t sessions = 0;
  std::size_t interactions = 0;
  double avg_session_length = 0.0;
  std::size_t train_sessions = 0;
  std::size_t test_sessions = 0;
  std::size_t zero_filled_features = 0;
};

DatasetStats dataset_stats(const SessionDataset& ds);

// Clustered synthetic benchmark. Items i0..i(n-1) are partitioned into
// contiguous clusters (item j belongs to cluster j / items_per_cluster).
// Each cluster carries a balanced pool of recurring item sequences; every
// session picks a home cluster and replays one of its sequences, and each
// non-final position is independently replaced by an out-of-cluster item
// with probability leak_prob. The final position (the prediction target)
// always stays in the home cluster. Features are the cluster centroid
// (N(0,1) coordinates) plus N(0, 0.1^2) noise.
struct SynthConfig {
  int n_clusters = 8;
  int items_per_cluster = 25;
  int n_sessions = 2000;
  int session_len = 4;
  double leak_prob = 0.1;
  std::uint64_t seed = 1;
  int feature_dim = 100;
};

struct SynthData {
  EventLog log;          // timestamps encode generation order
  FeatureFile features;  // all items, in index order
};

SynthData synth_sessions(const SynthConfig& cfg);

// Convenience: generated log -> dataset with features attached. Synthetic
// data is not frequency-filtered; the vocabulary covers every generated
// item whether or not it appears in a session.
SessionDataset synth_dataset(const SynthConfig& cfg, double test_fraction = 0.1);

}  // namespace dsbr
