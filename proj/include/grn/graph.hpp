#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grn {

/// Thrown when a graph violates its structural invariants.
class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Undirected simple edge between 0-based vertices, stored with first < second.
using Edge = std::pair<int, int>;

/// Dense row-major n x n 0/1 matrix.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(int n) : n_(n), cells_(static_cast<std::size_t>(n) * n, 0) {}

  int size() const { return n_; }
  std::uint8_t operator()(int i, int j) const { return cells_[static_cast<std::size_t>(i) * n_ + j]; }
  std::uint8_t& operator()(int i, int j) { return cells_[static_cast<std::size_t>(i) * n_ + j]; }

  bool operator==(const AdjacencyMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Flattened bit string; one byte per bit so it can be compared and hashed directly.
using BitString = std::vector<std::uint8_t>;

/// Simple undirected graph with optional node features and binary label.
///
/// Vertices are 0-based in memory. File formats that use 1-based indices
/// convert at the boundary.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph and validates it. Edges may be given in either orientation.
  Graph(int n, std::vector<Edge> edges);

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }

  /// Sorted, normalized (u < v) edge list.
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::vector<int>>& neighbors() const { return adjacency_; }
  const std::vector<int>& neighbors(int v) const { return adjacency_[static_cast<std::size_t>(v)]; }
  int degree(int v) const { return static_cast<int>(adjacency_[static_cast<std::size_t>(v)].size()); }
  bool has_edge(int u, int v) const;

  const std::optional<std::vector<std::vector<double>>>& node_features() const { return features_; }
  void set_node_features(std::vector<std::vector<double>> features);

  std::optional<int> label() const { return label_; }
  void set_label(int label);

  /// Relabels vertices: vertex v becomes perm[v]. Features move with their vertex.
  Graph permuted(const std::vector<int>& perm) const;

  bool same_structure(const Graph& other) const { return n_ == other.n_ && edges_ == other.edges_; }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::optional<std::vector<std::vector<double>>> features_;
  std::optional<int> label_;
};

AdjacencyMatrix adjacency_matrix(const Graph& g);

/// Column-major flattening of the full matrix: bit (i + n*j) holds A(i, j).
BitString flatten_full(const AdjacencyMatrix& a);

/// Length of the padded strict upper triangle for graphs of up to n_max nodes.
constexpr std::size_t upper_length(int n_max) {
  return n_max < 2 ? 0 : static_cast<std::size_t>(n_max) * (n_max - 1) / 2;
}

/// Position of pair (i, j), i < j < n_max, in the row-major strict upper triangle.
std::size_t upper_index(int i, int j, int n_max);

/// Strict upper triangle in row-major pair order, zero-padded to n_max nodes.
/// Throws std::invalid_argument when the matrix is larger than n_max.
BitString flatten_upper(const AdjacencyMatrix& a, int n_max);

/// Inverse of flatten_upper for a full n_max x n_max symmetric matrix.
AdjacencyMatrix unflatten_upper(const BitString& bits, int n_max);

}  // namespace grn
