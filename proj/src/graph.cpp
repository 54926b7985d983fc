#include "grn/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace grn {

Graph::Graph(int n, std::vector<Edge> edges) : n_(n), adjacency_(static_cast<std::size_t>(std::max(n, 0))) {
  if (n < 1) throw GraphError("graph must have at least one node");
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw GraphError("edge endpoint out of range: (" + std::to_string(u) + ", " + std::to_string(v) + ")");
    if (u == v) throw GraphError("self-loop on node " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) throw GraphError("duplicate edge");
  edges_ = std::move(edges);
  for (const auto& [u, v] : edges_) {
    adjacency_[static_cast<std::size_t>(u)].push_back(v);
    adjacency_[static_cast<std::size_t>(v)].push_back(u);
  }
  for (auto& row : adjacency_) std::sort(row.begin(), row.end());
}

bool Graph::has_edge(int u, int v) const {
  const auto& row = adjacency_[static_cast<std::size_t>(u)];
  return std::binary_search(row.begin(), row.end(), v);
}

void Graph::set_node_features(std::vector<std::vector<double>> features) {
  if (features.size() != static_cast<std::size_t>(n_)) throw GraphError("node feature count must equal node count");
  for (const auto& row : features)
    if (row.size() != features.front().size()) throw GraphError("node features must share one width");
  features_ = std::move(features);
}

void Graph::set_label(int label) {
  if (label != 0 && label != 1) throw GraphError("graph label must be 0 or 1");
  label_ = label;
}

Graph Graph::permuted(const std::vector<int>& perm) const {
  if (perm.size() != static_cast<std::size_t>(n_)) throw GraphError("permutation size mismatch");
  std::vector<Edge> mapped;
  mapped.reserve(edges_.size());
  for (const auto& [u, v] : edges_) mapped.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
  Graph out(n_, std::move(mapped));
  if (features_) {
    std::vector<std::vector<double>> moved(features_->size());
    for (std::size_t v = 0; v < moved.size(); ++v) moved[static_cast<std::size_t>(perm[v])] = (*features_)[v];
    out.features_ = std::move(moved);
  }
  out.label_ = label_;
  return out;
}

AdjacencyMatrix adjacency_matrix(const Graph& g) {
  AdjacencyMatrix a(g.num_nodes());
  for (const auto& [u, v] : g.edges()) {
    a(u, v) = 1;
    a(v, u) = 1;
  }
  return a;
}

BitString flatten_full(const AdjacencyMatrix& a) {
  const int n = a.size();
  BitString bits(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * j] = a(i, j);
  return bits;
}

std::size_t upper_index(int i, int j, int n_max) {
  // rows 0..i-1 contribute (n_max-1) + (n_max-2) + ... + (n_max-i) pairs
  const auto row_start = static_cast<std::size_t>(i) * (2 * static_cast<std::size_t>(n_max) - i - 1) / 2;
  return row_start + static_cast<std::size_t>(j - i - 1);
}

BitString flatten_upper(const AdjacencyMatrix& a, int n_max) {
  const int n = a.size();
  if (n > n_max)
    throw std::invalid_argument("graph has " + std::to_string(n) + " nodes, more than n_max = " + std::to_string(n_max));
  BitString bits(upper_length(n_max), 0);
  std::size_t pos = 0;
  for (int i = 0; i < n_max; ++i)
    for (int j = i + 1; j < n_max; ++j, ++pos)
      if (j < n) bits[pos] = a(i, j);
  return bits;
}

AdjacencyMatrix unflatten_upper(const BitString& bits, int n_max) {
  if (bits.size() != upper_length(n_max)) throw std::invalid_argument("bit string length does not match n_max");
  AdjacencyMatrix a(n_max);
  std::size_t pos = 0;
  for (int i = 0; i < n_max; ++i)
    for (int j = i + 1; j < n_max; ++j, ++pos) {
      a(i, j) = bits[pos];
      a(j, i) = bits[pos];
    }
  return a;
}

}  // namespace grn
