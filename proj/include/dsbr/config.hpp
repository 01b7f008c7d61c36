#pragma once

#include <string>

#include "dsbr/data.hpp"
#include "dsbr/model.hpp"

namespace dsbr {

// Everything a command run needs: model hyperparameters plus pipeline knobs
// and paths. Flags mirror these fields (kebab-case); a key=value config file
// fills them first and flags win.
struct RunConfig {
  ModelConfig model;
  int epochs = 10;
  double test_fraction = 0.1;
  int min_item_occurrences = 5;
  int min_session_len = 2;
  bool run_sknn = false;
  int sknn_k = 50;
  SynthConfig synth;

  std::string sessions_path;
  std::string features_path;
  std::string checkpoint_path;
  std::string out_dir = "out";
};

// Full config echo, stable key order; embedded verbatim in every artifact.
std::string config_json(const RunConfig& cfg);

// Restores the fields recorded by config_json (absent keys keep their
// current values). Used to rebuild a model from a checkpoint's sidecar.
void config_from_json(const std::string& json_text, RunConfig& cfg);

}  // namespace dsbr
