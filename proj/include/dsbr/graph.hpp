#pragma once

#include <string>
#include <vector>

#include "dsbr/data.hpp"
#include "dsbr/tensor.hpp"

namespace dsbr {

// Directed item co-occurrence graph: an edge i -> j for every consecutive
// pair (i, j) inside a session, weighted by its count. Message passing uses
// the out-degree-normalized weights; items with no outgoing edges simply
// receive no message (their propagated rows are zero before the layer's
// linear map).
struct CoGraph {
  int n = 0;
  SparseRowMatrix adjacency;      // row-normalized, rows/cols sorted ascending
  std::vector<double> raw_count;  // parallel to adjacency.val
  std::vector<double> out_degree; // total outgoing count per item
  std::size_t edge_count = 0;     // distinct directed pairs
};

// isolated_self_loops: give items with no outgoing transition a unit
// self-edge instead of a zero message row.
CoGraph build_cograph(const std::vector<SessionRecord>& sessions, int n_items,
                      bool isolated_self_loops = false);

// `item_i \t item_j \t count` in row-major edge order.
void write_graph_tsv(const CoGraph& g, const ItemVocab& vocab, const std::string& path);

// One propagation layer: row-normalized neighborhood average, linear map,
// L2 row normalization. Zero in-rows stay zero through the normalization.
Tensor gcn_layer(const Tensor& x, const CoGraph& g, const Tensor& w);

// Stack of layers; the result is the mean of the input and every layer
// output, so a node keeps its own signal even in sparse regions.
Tensor gcn_encode(const Tensor& x0, const CoGraph& g, const std::vector<Tensor>& weights);

}  // namespace dsbr
