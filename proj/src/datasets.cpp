#include "grn/datasets.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <set>

namespace grn::data {

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

Graph gen_erdos_renyi(int n, double p, Rng& rng) {
  if (n < 1) throw std::invalid_argument("erdos-renyi: n must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("erdos-renyi: p must lie in (0, 1)");
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

Graph gen_d_regular(int n, int d, Rng& rng) {
  if (n < 1 || d < 0 || d >= n || (n * d) % 2 != 0)
    throw std::invalid_argument("d-regular: need 0 <= d < n and n*d even (n=" + std::to_string(n) +
                                ", d=" + std::to_string(d) + ")");
  std::vector<int> points(static_cast<std::size_t>(n * d));
  for (int v = 0; v < n; ++v) std::fill_n(points.begin() + v * d, d, v);
  constexpr int kMaxAttempts = 1'000'000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::shuffle(points.begin(), points.end(), rng);
    std::vector<Edge> edges;
    bool simple = true;
    for (std::size_t i = 0; i < points.size() && simple; i += 2) {
      const int u = std::min(points[i], points[i + 1]), v = std::max(points[i], points[i + 1]);
      simple = u != v;
      edges.emplace_back(u, v);
    }
    if (!simple) continue;
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) continue;
    return Graph(n, std::move(edges));
  }
  throw std::runtime_error("d-regular: no simple pairing found");
}

namespace {

std::vector<std::uint32_t> adjacency_masks(const Graph& g) {
  std::vector<std::uint32_t> mask(static_cast<std::size_t>(g.num_nodes()), 0);
  for (const auto& [u, v] : g.edges()) {
    mask[static_cast<std::size_t>(u)] |= 1u << v;
    mask[static_cast<std::size_t>(v)] |= 1u << u;
  }
  return mask;
}

}  // namespace

long count_motif(const Graph& g, Motif motif) {
  const int n = g.num_nodes();
  if (n > 20) throw std::invalid_argument("count_motif supports at most 20 nodes");
  const auto adj = adjacency_masks(g);
  auto e = [&](int a, int b) { return (adj[static_cast<std::size_t>(a)] >> b) & 1u; };
  long count = 0;
  if (motif == Motif::triangle) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (e(a, b))
          for (int c = b + 1; c < n; ++c) count += e(a, c) & e(b, c);
    return count;
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          const unsigned ab = e(a, b), ac = e(a, c), ad = e(a, d), bc = e(b, c), bd = e(b, d), cd = e(c, d);
          if (motif == Motif::square) {
            // the three Hamiltonian cycles on {a, b, c, d}
            count += (ab & bc & cd & ad) + (ab & bd & cd & ac) + (ac & bc & bd & ad);
          } else {
            count += ab + ac + ad + bc + bd + cd >= 5 ? 1 : 0;
          }
        }
  return count;
}

bool is_connected(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int w : g.neighbors(v))
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        frontier.push(w);
      }
  }
  return reached == n;
}

int label_synthetic(const Graph& g, const Task& task) {
  switch (task.kind) {
    case TaskKind::connected:
      return is_connected(g) ? 1 : 0;
    case TaskKind::triangles:
      return count_motif(g, Motif::triangle) >= task.threshold ? 1 : 0;
    case TaskKind::squares:
      return count_motif(g, Motif::square) >= task.threshold ? 1 : 0;
    case TaskKind::diamond:
      return count_motif(g, Motif::diamond) >= task.threshold ? 1 : 0;
  }
  throw std::invalid_argument("unknown task");
}

void SyntheticSpec::validate() const {
  if (n < 1 || n > 20) throw std::invalid_argument("synthetic graphs need 1 <= n <= 20");
  if (family == Family::erdos_renyi && !(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (family == Family::d_regular && (d < 0 || d >= n || (n * d) % 2 != 0))
    throw std::invalid_argument("d-regular needs 0 <= d < n and n*d even");
  if (task.kind != TaskKind::connected && task.threshold < 1) throw std::invalid_argument("motif thresholds must be positive");
  if (train < 0 || val < 0 || test < 0 || total() < 1) throw std::invalid_argument("dataset sizes must be non-negative");
}

SyntheticSpec default_spec(Family family, TaskKind kind) {
  SyntheticSpec spec;
  spec.family = family;
  spec.task.kind = kind;
  const bool er = family == Family::erdos_renyi;
  switch (kind) {
    case TaskKind::connected:
      break;
    case TaskKind::triangles:
      spec.task.threshold = er ? 6 : 2;
      break;
    case TaskKind::squares:
      spec.task.threshold = er ? 6 : 3;
      break;
    case TaskKind::diamond:
      if (!er) throw std::invalid_argument("the diamond task is only defined on Erdos-Renyi graphs");
      spec.task.threshold = 3;
      break;
  }
  return spec;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset out;
  out.name = to_string(spec.family) + "_" + to_string(spec.task.kind);
  const int total = spec.total();
  int quota[2] = {total / 2 + total % 2, total / 2};
  constexpr long kMaxDraws = 10'000'000;
  for (long draws = 0; static_cast<int>(out.graphs.size()) < total; ++draws) {
    if (draws >= kMaxDraws) throw std::runtime_error("synthetic generation could not balance the classes");
    Graph g = spec.family == Family::erdos_renyi ? gen_erdos_renyi(spec.n, spec.p, rng) : gen_d_regular(spec.n, spec.d, rng);
    const int y = label_synthetic(g, spec.task);
    if (spec.balanced) {
      if (quota[y] == 0) continue;
      --quota[y];
    }
    g.set_label(y);
    out.graphs.push_back(std::move(g));
  }
  // Rejection sampling front-loads the common class; mix the order.
  std::shuffle(out.graphs.begin(), out.graphs.end(), rng);
  return out;
}

Family parse_family(const std::string& text) {
  if (text == "er" || text == "erdos_renyi") return Family::erdos_renyi;
  if (text == "regular" || text == "d_regular") return Family::d_regular;
  throw std::invalid_argument("unknown graph family '" + text + "' (er, regular)");
}

TaskKind parse_task(const std::string& text) {
  if (text == "connected") return TaskKind::connected;
  if (text == "triangles") return TaskKind::triangles;
  if (text == "squares") return TaskKind::squares;
  if (text == "diamond") return TaskKind::diamond;
  throw std::invalid_argument("unknown task '" + text + "' (connected, triangles, squares, diamond)");
}

std::string to_string(Family family) { return family == Family::erdos_renyi ? "er" : "regular"; }

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::connected:
      return "connected";
    case TaskKind::triangles:
      return "triangles";
    case TaskKind::squares:
      return "squares";
    case TaskKind::diamond:
      return "diamond";
  }
  return "?";
}

namespace {

struct LineReader {
  std::string path;
  std::ifstream in;
  std::size_t line_no = 0;

  explicit LineReader(std::string p) : path(std::move(p)), in(path) {
    if (!in) throw std::runtime_error("cannot open " + path);
  }

  // Next non-blank line split on commas and whitespace into integers.
  bool next(std::vector<long>& fields) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      fields.clear();
      const char* p = line.data();
      const char* end = p + line.size();
      while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == ',' || *p == '\r')) ++p;
        if (p == end) break;
        long value = 0;
        auto [ptr, ec] = std::from_chars(p, end, value);
        if (ec != std::errc() || (ptr < end && *ptr != ' ' && *ptr != '\t' && *ptr != ',' && *ptr != '\r'))
          throw ParseError(path, line_no, "expected an integer in '" + line + "'");
        fields.push_back(value);
        p = ptr;
      }
      if (!fields.empty()) return true;
    }
    return false;
  }

  std::vector<long> column(std::size_t width) {
    std::vector<long> out, fields;
    while (next(fields)) {
      if (fields.size() != width)
        throw ParseError(path, line_no, "expected " + std::to_string(width) + " field(s), got " + std::to_string(fields.size()));
      out.insert(out.end(), fields.begin(), fields.end());
    }
    return out;
  }
};

std::string file_of(const std::string& dir, const std::string& name, const std::string& suffix) {
  return (std::filesystem::path(dir) / (name + "_" + suffix + ".txt")).string();
}

}  // namespace

Dataset load_tu_dataset(const std::string& dir, const std::string& name, int max_nodes) {
  LineReader indicator_file(file_of(dir, name, "graph_indicator"));
  const auto indicator = indicator_file.column(1);
  const long num_nodes = static_cast<long>(indicator.size());
  if (num_nodes == 0) throw DatasetError(indicator_file.path + " is empty");

  // Nodes of one graph are contiguous and graph ids run 1..G without gaps.
  std::vector<long> first_node{0};
  if (indicator.front() != 1) throw DatasetError("graph indicator must start at graph 1");
  for (long v = 1; v < num_nodes; ++v) {
    const long prev = indicator[static_cast<std::size_t>(v - 1)], cur = indicator[static_cast<std::size_t>(v)];
    if (cur == prev) continue;
    if (cur != prev + 1)
      throw DatasetError("graph indicator jumps from graph " + std::to_string(prev) + " to " + std::to_string(cur) +
                         " at node " + std::to_string(v + 1));
    first_node.push_back(v);
  }
  const std::size_t num_graphs = first_node.size();
  first_node.push_back(num_nodes);

  LineReader label_file(file_of(dir, name, "graph_labels"));
  const auto raw_labels = label_file.column(1);
  if (raw_labels.size() != num_graphs)
    throw DatasetError(std::to_string(raw_labels.size()) + " graph labels for " + std::to_string(num_graphs) + " graphs");
  const std::set<long> label_values(raw_labels.begin(), raw_labels.end());
  if (label_values.size() > 2) throw DatasetError("only binary graph labels are supported");
  const bool already_binary = *label_values.begin() >= 0 && *label_values.rbegin() <= 1;

  std::vector<std::vector<Edge>> edges(num_graphs);
  std::set<std::pair<long, long>> directed;
  {
    LineReader a(file_of(dir, name, "A"));
    std::vector<long> fields;
    while (a.next(fields)) {
      if (fields.size() != 2) throw ParseError(a.path, a.line_no, "expected two node ids");
      for (long id : fields)
        if (id < 1 || id > num_nodes)
          throw ParseError(a.path, a.line_no, "node id " + std::to_string(id) + " outside 1.." + std::to_string(num_nodes));
      const long u = fields[0] - 1, v = fields[1] - 1;
      const long gu = indicator[static_cast<std::size_t>(u)], gv = indicator[static_cast<std::size_t>(v)];
      if (gu != gv) throw ParseError(a.path, a.line_no, "edge joins graphs " + std::to_string(gu) + " and " + std::to_string(gv));
      directed.emplace(u, v);
    }
  }
  for (const auto& [u, v] : directed) {
    if (!directed.count({v, u}))
      throw DatasetError("edge list is not symmetric: (" + std::to_string(u + 1) + ", " + std::to_string(v + 1) +
                         ") has no reverse");
    if (u >= v) continue;  // self-loops dropped, each undirected edge once
    const auto gi = static_cast<std::size_t>(indicator[static_cast<std::size_t>(u)] - 1);
    edges[gi].emplace_back(static_cast<int>(u - first_node[gi]), static_cast<int>(v - first_node[gi]));
  }

  std::vector<long> node_labels;
  std::map<long, int> node_label_index;
  const std::string node_label_path = file_of(dir, name, "node_labels");
  if (std::filesystem::exists(node_label_path)) {
    LineReader nl(node_label_path);
    node_labels = nl.column(1);
    if (static_cast<long>(node_labels.size()) != num_nodes)
      throw DatasetError(std::to_string(node_labels.size()) + " node labels for " + std::to_string(num_nodes) + " nodes");
    for (long x : node_labels) node_label_index.emplace(x, 0);
    int next = 0;
    for (auto& [value, index] : node_label_index) index = next++;
  }

  Dataset out;
  out.name = name;
  out.node_feature_width = static_cast<int>(node_label_index.size());
  for (std::size_t gi = 0; gi < num_graphs; ++gi) {
    const long n = first_node[gi + 1] - first_node[gi];
    if (n > max_nodes) continue;
    Graph g(static_cast<int>(n), std::move(edges[gi]));
    const long raw = raw_labels[gi];
    g.set_label(already_binary ? static_cast<int>(raw) : (raw == *label_values.begin() ? 0 : 1));
    if (!node_labels.empty()) {
      std::vector<std::vector<double>> features(static_cast<std::size_t>(n),
                                                std::vector<double>(node_label_index.size(), 0.0));
      for (long v = 0; v < n; ++v)
        features[static_cast<std::size_t>(v)][static_cast<std::size_t>(
            node_label_index.at(node_labels[static_cast<std::size_t>(first_node[gi] + v)]))] = 1.0;
      g.set_node_features(std::move(features));
    }
    out.graphs.push_back(std::move(g));
  }
  return out;
}

void write_tu_dataset(const std::string& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  std::ofstream a(file_of(dir, dataset.name, "A")), ind(file_of(dir, dataset.name, "graph_indicator")),
      labels(file_of(dir, dataset.name, "graph_labels"));
  if (!a || !ind || !labels) throw std::runtime_error("cannot write dataset files under " + dir);
  const bool with_node_labels =
      !dataset.graphs.empty() && std::all_of(dataset.graphs.begin(), dataset.graphs.end(), [](const Graph& g) {
        return g.node_features().has_value();
      });
  std::ofstream node_labels;
  if (with_node_labels) node_labels.open(file_of(dir, dataset.name, "node_labels"));

  long offset = 1;
  for (std::size_t gi = 0; gi < dataset.graphs.size(); ++gi) {
    const Graph& g = dataset.graphs[gi];
    for (int v = 0; v < g.num_nodes(); ++v) ind << gi + 1 << '\n';
    for (const auto& [u, v] : g.edges()) {
      a << offset + u << ", " << offset + v << '\n';
      a << offset + v << ", " << offset + u << '\n';
    }
    labels << g.label().value_or(0) << '\n';
    if (with_node_labels)
      for (const auto& row : *g.node_features())
        node_labels << std::distance(row.begin(), std::max_element(row.begin(), row.end())) << '\n';
    offset += g.num_nodes();
  }
  if (!a || !ind || !labels) throw std::runtime_error("failed writing dataset " + dataset.name);
}

}  // namespace grn::data
