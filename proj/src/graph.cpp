#include "dsbr/graph.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

namespace dsbr {

CoGraph build_cograph(const std::vector<SessionRecord>& sessions, int n_items,
                      bool isolated_self_loops) {
  if (n_items <= 0) throw std::invalid_argument("build_cograph: n_items must be positive");
  std::map<std::pair<int, int>, double> counts;  // ordered: CSR comes out sorted
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i + 1 < s.items.size(); ++i) {
      int a = s.items[i], b = s.items[i + 1];
      if (a < 0 || a >= n_items || b < 0 || b >= n_items)
        throw std::invalid_argument("build_cograph: item index out of range");
      counts[{a, b}] += 1.0;
    }
  }
  if (isolated_self_loops) {
    std::vector<bool> has_out(static_cast<std::size_t>(n_items), false);
    for (const auto& [edge, c] : counts) has_out[static_cast<std::size_t>(edge.first)] = true;
    for (int i = 0; i < n_items; ++i)
      if (!has_out[static_cast<std::size_t>(i)]) counts[{i, i}] = 1.0;
  }
  CoGraph g;
  g.n = n_items;
  g.out_degree.assign(static_cast<std::size_t>(n_items), 0.0);
  for (const auto& [edge, c] : counts) g.out_degree[static_cast<std::size_t>(edge.first)] += c;
  g.edge_count = counts.size();
  g.adjacency.rows = static_cast<std::size_t>(n_items);
  g.adjacency.cols = static_cast<std::size_t>(n_items);
  g.adjacency.row_ptr.assign(static_cast<std::size_t>(n_items) + 1, 0);
  g.adjacency.col.reserve(counts.size());
  g.adjacency.val.reserve(counts.size());
  g.raw_count.reserve(counts.size());
  int row = 0;
  for (const auto& [edge, c] : counts) {
    while (row < edge.first) g.adjacency.row_ptr[static_cast<std::size_t>(++row)] = g.adjacency.col.size();
    g.adjacency.col.push_back(edge.second);
    g.adjacency.val.push_back(c / g.out_degree[static_cast<std::size_t>(edge.first)]);
    g.raw_count.push_back(c);
  }
  while (row < n_items) g.adjacency.row_ptr[static_cast<std::size_t>(++row)] = g.adjacency.col.size();
  return g;
}

void write_graph_tsv(const CoGraph& g, const ItemVocab& vocab, const std::string& path) {
  if (static_cast<std::size_t>(g.n) != vocab.size())
    throw std::invalid_argument("write_graph_tsv: vocabulary size mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (int i = 0; i < g.n; ++i)
    for (std::size_t e = g.adjacency.row_ptr[static_cast<std::size_t>(i)];
         e < g.adjacency.row_ptr[static_cast<std::size_t>(i) + 1]; ++e)
      out << vocab.items[static_cast<std::size_t>(i)] << '\t'
          << vocab.items[static_cast<std::size_t>(g.adjacency.col[e])] << '\t'
          << g.raw_count[e] << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Tensor gcn_layer(const Tensor& x, const CoGraph& g, const Tensor& w) {
  if (x.rows() != static_cast<std::size_t>(g.n))
    throw std::invalid_argument("gcn_layer: embedding row count differs from graph size");
  return l2_normalize_rows(matmul(spmm(g.adjacency, x), w));
}

Tensor gcn_encode(const Tensor& x0, const CoGraph& g, const std::vector<Tensor>& weights) {
  Tensor acc = x0;
  Tensor x = x0;
  for (const auto& w : weights) {
    x = gcn_layer(x, g, w);
    acc = add(acc, x);
  }
  return scale(acc, 1.0 / static_cast<double>(weights.size() + 1));
}

}  // namespace dsbr
