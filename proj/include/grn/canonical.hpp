#pragma once

#include <vector>

#include "grn/graph.hpp"

namespace grn {

/// Largest graph canonicalize() accepts unless told otherwise.
inline constexpr int kDefaultMaxCanonicalNodes = 20;

/// Canonical relabeling of a graph.
///
/// permutation[v] is the canonical position of input vertex v. Two graphs are
/// isomorphic exactly when their canonical_edges (equivalently, their
/// certificates) coincide.
struct CanonicalForm {
  std::vector<int> permutation;
  std::vector<Edge> canonical_edges;
  /// Row-major strict upper triangle of the relabeled adjacency matrix (n_max = n).
  BitString certificate;
};

/// Individualization-refinement canonical labeling.
///
/// Color refinement splits vertices by the multiset of neighbor colors until
/// the ordered partition is equitable; non-discrete partitions branch on the
/// first non-singleton cell. Among all leaves of the search tree the one with
/// the lexicographically smallest upper-triangle string wins. Automorphisms
/// discovered at equal leaves prune sibling branches in the same orbit.
///
/// Throws std::invalid_argument when g has more than max_nodes vertices.
CanonicalForm canonicalize(const Graph& g, int max_nodes = kDefaultMaxCanonicalNodes);

/// Canonicalized adjacency string: strict upper triangle of the canonical
/// adjacency matrix, zero-padded to n_max nodes.
BitString encode_asc(const Graph& g, int n_max);

}  // namespace grn
