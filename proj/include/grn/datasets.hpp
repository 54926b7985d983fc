#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "grn/graph.hpp"

namespace grn::data {

using Rng = std::mt19937_64;

/// Malformed dataset file; the message carries file name and 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Files that parse but do not describe a consistent set of graphs.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  /// Width of the one-hot node labels, 0 when the graphs carry none.
  int node_feature_width = 0;
};

/// Each of the n(n-1)/2 pairs independently with probability p.
Graph gen_erdos_renyi(int n, double p, Rng& rng);

/// Uniform pairing of n*d half-edges, rejecting self-loops and multi-edges.
/// Throws std::invalid_argument unless n*d is even and 0 <= d < n.
Graph gen_d_regular(int n, int d, Rng& rng);

enum class Motif { triangle, square, diamond };

/// Exact count by vertex-subset enumeration:
///   triangle  3-sets spanning a triangle
///   square    4-cycles (not necessarily induced), each cycle once
///   diamond   4-sets inducing at least 5 edges
/// Throws std::invalid_argument above 20 nodes.
long count_motif(const Graph& g, Motif motif);

/// Breadth-first search from vertex 0.
bool is_connected(const Graph& g);

enum class Family { erdos_renyi, d_regular };
enum class TaskKind { connected, triangles, squares, diamond };

struct Task {
  TaskKind kind = TaskKind::connected;
  int threshold = 0;  ///< unused for connectivity
};

/// 1 when the graph is connected, or holds at least threshold motifs.
int label_synthetic(const Graph& g, const Task& task);

struct SyntheticSpec {
  Family family = Family::erdos_renyi;
  int n = 12;
  double p = 0.3;
  int d = 3;
  Task task;
  int train = 1000;
  int val = 200;
  int test = 200;
  std::uint64_t seed = 0;
  /// Rejection-sample until both labels are equally frequent. Off by
  /// default: labels follow the natural distribution of the family.
  bool balanced = false;

  int total() const { return train + val + test; }
  void validate() const;
};

/// Default thresholds: triangles 6, squares 6, diamond 3 on Erdos-Renyi;
/// triangles 2, squares 3 on 3-regular graphs.
SyntheticSpec default_spec(Family family, TaskKind kind);

/// Draws spec.total() labeled graphs in a seed-determined order.
Dataset generate_synthetic(const SyntheticSpec& spec);

Family parse_family(const std::string& text);
TaskKind parse_task(const std::string& text);
std::string to_string(Family family);
std::string to_string(TaskKind kind);

/// Reads <dir>/<name>_A.txt, _graph_indicator.txt, _graph_labels.txt and,
/// when present, _node_labels.txt. Graph labels outside {0, 1} are remapped
/// to 0/1 in increasing order; node labels become one-hot features over the distinct
/// values. Graphs with more than max_nodes vertices are dropped.
Dataset load_tu_dataset(const std::string& dir, const std::string& name, int max_nodes);

/// Writes the same file layout. Node labels are written when every graph
/// carries one-hot features.
void write_tu_dataset(const std::string& dir, const Dataset& dataset);

}  // namespace grn::data
