#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dsbr/tensor.hpp"

namespace dsbr {

// Model checkpoint, binary layout:
//   "DSBR" | u32 version | u32 count
//   per tensor: u32 name_len | name | u32 rank | u64 dims[rank] | f64 payload
// Integers and doubles little-endian; payload row-major. A small JSON
// sidecar (<path>.meta.json) lists names and shapes for inspection;
// run_json, when given, is parsed and embedded there under "run" so every
// artifact carries the config and seed that produced it.
void save_checkpoint(const std::string& path, const std::vector<Param>& params,
                     const std::string& run_json = "");
std::vector<Param> load_checkpoint(const std::string& path);

// The sidecar's "run" object as a JSON string ("" when absent).
std::string load_checkpoint_run_json(const std::string& path);

// Item feature table, binary layout:
//   "DSFT" | u32 version | u64 n | u64 dim
//   n newline-terminated external item ids | n*dim f64 rows
struct FeatureFile {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> data;  // ids.size() x dim
};

void save_features(const std::string& path, const FeatureFile& f);
FeatureFile load_features(const std::string& path);

}  // namespace dsbr
