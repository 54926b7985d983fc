#include "grn/canonical.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace grn {
namespace {

// Colors encode an ordered partition: every vertex of a cell carries the
// position of the cell's first element, so sorting by color lists the cells in order.
using Coloring = std::vector<int>;

void refine(const Graph& g, Coloring& color) {
  const int n = g.num_nodes();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> keys(static_cast<std::size_t>(n));
  int cells = 0;
  {
    Coloring sorted = color;
    std::sort(sorted.begin(), sorted.end());
    cells = static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  }
  while (cells < n) {
    for (int v = 0; v < n; ++v) {
      auto& key = keys[static_cast<std::size_t>(v)];
      key.clear();
      key.push_back(color[static_cast<std::size_t>(v)]);
      for (int u : g.neighbors(v)) key.push_back(color[static_cast<std::size_t>(u)]);
      std::sort(key.begin() + 1, key.end());
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
    });
    int next_cells = 0;
    for (int pos = 0; pos < n; ++pos) {
      const int v = order[static_cast<std::size_t>(pos)];
      if (pos == 0 || keys[static_cast<std::size_t>(v)] != keys[static_cast<std::size_t>(order[static_cast<std::size_t>(pos - 1)])]) {
        ++next_cells;
        color[static_cast<std::size_t>(v)] = pos;
      } else {
        color[static_cast<std::size_t>(v)] = color[static_cast<std::size_t>(order[static_cast<std::size_t>(pos - 1)])];
      }
    }
    if (next_cells == cells) break;
    cells = next_cells;
  }
}

BitString certificate_of(const Graph& g, const std::vector<int>& perm) {
  const int n = g.num_nodes();
  BitString bits(upper_length(n), 0);
  for (const auto& [u, v] : g.edges()) {
    int a = perm[static_cast<std::size_t>(u)];
    int b = perm[static_cast<std::size_t>(v)];
    if (a > b) std::swap(a, b);
    bits[upper_index(a, b, n)] = 1;
  }
  return bits;
}

class Searcher {
 public:
  explicit Searcher(const Graph& g) : g_(g), n_(g.num_nodes()) {}

  CanonicalForm run() {
    Coloring color(static_cast<std::size_t>(n_), 0);
    refine(g_, color);
    search(color, 0);
    CanonicalForm form;
    form.permutation = best_perm_;
    form.certificate = best_cert_;
    for (const auto& [u, v] : g_.edges()) {
      int a = best_perm_[static_cast<std::size_t>(u)];
      int b = best_perm_[static_cast<std::size_t>(v)];
      form.canonical_edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(form.canonical_edges.begin(), form.canonical_edges.end());
    return form;
  }

 private:
  static constexpr int kNoJump = -1;

  // Returns the depth the search should unwind to, or kNoJump.
  int search(const Coloring& color, int depth) {
    int target = -1;
    int target_size = 0;
    {
      std::vector<int> cell_size(static_cast<std::size_t>(n_), 0);
      for (int c : color) ++cell_size[static_cast<std::size_t>(c)];
      for (int c = 0; c < n_; ++c)
        if (cell_size[static_cast<std::size_t>(c)] > 1) {
          target = c;
          target_size = cell_size[static_cast<std::size_t>(c)];
          break;
        }
    }
    if (target < 0) return visit_leaf(color);

    std::vector<int> cell;
    cell.reserve(static_cast<std::size_t>(target_size));
    for (int v = 0; v < n_; ++v)
      if (color[static_cast<std::size_t>(v)] == target) cell.push_back(v);

    std::vector<int> explored;
    for (int v : cell) {
      if (!explored.empty() && in_explored_orbit(v, explored)) continue;
      explored.push_back(v);

      Coloring child = color;
      for (int u : cell)
        if (u != v) child[static_cast<std::size_t>(u)] = target + 1;
      refine(g_, child);

      path_.push_back(v);
      const int jump = search(child, depth + 1);
      path_.pop_back();
      if (jump != kNoJump && jump < depth) return jump;
    }
    return kNoJump;
  }

  int visit_leaf(const Coloring& color) {
    std::vector<int> perm(color.begin(), color.end());
    BitString cert = certificate_of(g_, perm);
    if (best_perm_.empty()) {
      first_perm_ = best_perm_ = perm;
      first_path_ = best_path_ = path_;
      first_cert_ = best_cert_ = std::move(cert);
      return kNoJump;
    }
    if (cert == first_cert_) {
      record_automorphism(first_perm_, perm);
      return common_prefix(first_path_);
    }
    if (cert == best_cert_) {
      record_automorphism(best_perm_, perm);
      return common_prefix(best_path_);
    }
    if (cert < best_cert_) {
      best_perm_ = std::move(perm);
      best_path_ = path_;
      best_cert_ = std::move(cert);
    }
    return kNoJump;
  }

  int common_prefix(const std::vector<int>& other) const {
    std::size_t k = 0;
    while (k < path_.size() && k < other.size() && path_[k] == other[k]) ++k;
    return static_cast<int>(k);
  }

  // Two leaves with equal certificates differ by an automorphism mapping
  // vertex v to the vertex that occupies v's position in the other leaf.
  void record_automorphism(const std::vector<int>& from, const std::vector<int>& to) {
    std::vector<int> at_position(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v) at_position[static_cast<std::size_t>(to[static_cast<std::size_t>(v)])] = v;
    std::vector<int> gamma(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v) gamma[static_cast<std::size_t>(v)] = at_position[static_cast<std::size_t>(from[static_cast<std::size_t>(v)])];
    generators_.push_back(std::move(gamma));
  }

  // Orbits of the subgroup generated by known automorphisms that fix the current path pointwise.
  bool in_explored_orbit(int v, const std::vector<int>& explored) const {
    std::vector<int> parent(static_cast<std::size_t>(n_));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
      }
      return x;
    };
    bool any = false;
    for (const auto& gamma : generators_) {
      bool fixes_path = std::all_of(path_.begin(), path_.end(), [&](int p) { return gamma[static_cast<std::size_t>(p)] == p; });
      if (!fixes_path) continue;
      any = true;
      for (int x = 0; x < n_; ++x) {
        int a = find(x);
        int b = find(gamma[static_cast<std::size_t>(x)]);
        if (a != b) parent[static_cast<std::size_t>(a)] = b;
      }
    }
    if (!any) return false;
    const int root = find(v);
    return std::any_of(explored.begin(), explored.end(), [&](int e) { return find(e) == root; });
  }

  const Graph& g_;
  int n_;
  std::vector<int> path_;
  std::vector<int> first_perm_, best_perm_;
  std::vector<int> first_path_, best_path_;
  BitString first_cert_, best_cert_;
  std::vector<std::vector<int>> generators_;
};

}  // namespace

CanonicalForm canonicalize(const Graph& g, int max_nodes) {
  if (g.num_nodes() > max_nodes)
    throw std::invalid_argument("canonicalize: graph has " + std::to_string(g.num_nodes()) +
                                " nodes, limit is " + std::to_string(max_nodes));
  return Searcher(g).run();
}

BitString encode_asc(const Graph& g, int n_max) {
  if (g.num_nodes() > n_max)
    throw std::invalid_argument("encode_asc: graph has " + std::to_string(g.num_nodes()) +
                                " nodes, more than n_max = " + std::to_string(n_max));
  const CanonicalForm form = canonicalize(g, std::max(n_max, kDefaultMaxCanonicalNodes));
  BitString bits(upper_length(n_max), 0);
  for (const auto& [a, b] : form.canonical_edges) bits[upper_index(a, b, n_max)] = 1;
  return bits;
}

}  // namespace grn
