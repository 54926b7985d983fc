// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "grn/canonical.hpp"
#include "grn/harness.hpp"
#include "support/maxsat_checks.hpp"
#include "support/motif_oracle.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
namespace h = grn::harness;
namespace data = grn::data;
namespace gt = grn::testing;
using grn::BitString;
using grn::Graph;

namespace {

struct Settings {
  std::set<int> only;
  int asc_epochs = 40;
  int asc_patience = 10;
  int gnn_epochs = 200;
  int gnn_patience = 50;
  std::string gnn_features = "constant";
  int jobs = 1;
  std::string tu_dir;
  std::string cli;
  std::string report_dir = "acceptance_reports";
  std::string summary;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string mean_std(const h::RunReport& r) { return fmt("%.3f ± %.3f", r.mean, r.stddev); }

struct TaskId {
  data::Family family;
  data::TaskKind kind;
  std::string label() const { return data::to_string(family) + " " + data::to_string(kind); }
  bool operator<(const TaskId& o) const { return std::tie(family, kind) < std::tie(o.family, o.kind); }
};

struct TaskRuns {
  h::RunReport asc, gnn;
  double asc_seconds = 0.0;
};

class Synthetic {
 public:
  explicit Synthetic(const Settings& s) : settings_(s) {}

  const TaskRuns& get(const TaskId& id) {
    auto it = runs_.find(id);
    if (it != runs_.end()) return it->second;
    const auto spec = data::default_spec(id.family, id.kind);
    const auto ds = data::generate_synthetic(spec);
    const h::SplitPlan plan{.by_count = true,
                            .train = static_cast<std::size_t>(spec.train),
                            .val = static_cast<std::size_t>(spec.val),
                            .test = static_cast<std::size_t>(spec.test)};
    TaskRuns runs;
    runs.asc = run(ds, plan, id, h::ModelKind::grn_asc, &runs.asc_seconds);
    runs.gnn = run(ds, plan, id, h::ModelKind::gnn, nullptr);
    return runs_.emplace(id, std::move(runs)).first->second;
  }

 private:
  h::RunReport run(const data::Dataset& ds, const h::SplitPlan& plan, const TaskId& id, h::ModelKind kind,
                   double* seconds) {
    h::TrainConfig base;
    base.model = kind;
    const bool asc = kind == h::ModelKind::grn_asc;
    base.epochs = asc ? settings_.asc_epochs : settings_.gnn_epochs;
    base.patience = asc ? settings_.asc_patience : settings_.gnn_patience;
    base.features = h::parse_features(settings_.gnn_features);
    const h::GraphPool pool(ds, h::pool_options(kind, base.n_max, base.features, base.max_degree));
    std::fprintf(stderr, "training %s on %s\n", h::to_string(kind).c_str(), id.label().c_str());
    const auto start = std::chrono::steady_clock::now();
    auto report = h::grid_search(base, h::Grid{}, pool, plan, {0, 1, 2}, {.jobs = settings_.jobs, .progress = {}});
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds) *seconds = elapsed;
    report.dataset = data::to_string(id.family);
    report.task = data::to_string(id.kind);
    std::fprintf(stderr, "  %s %s in %.0fs\n", h::to_string(kind).c_str(), mean_std(report).c_str(), elapsed);
    if (!settings_.report_dir.empty()) {
      fs::create_directories(settings_.report_dir);
      std::ofstream(fs::path(settings_.report_dir) /
                    (report.dataset + "_" + report.task + "_" + h::to_string(kind) + ".json"))
          << h::report_to_json(report);
    }
    return report;
  }

  const Settings& settings_;
  std::map<TaskId, TaskRuns> runs_;
};

const TaskId kRegTriangles{data::Family::d_regular, data::TaskKind::triangles};
const TaskId kRegSquares{data::Family::d_regular, data::TaskKind::squares};
const TaskId kErConnected{data::Family::erdos_renyi, data::TaskKind::connected};
const TaskId kMotifTasks[] = {{data::Family::erdos_renyi, data::TaskKind::squares},
                              {data::Family::erdos_renyi, data::TaskKind::diamond},
                              {data::Family::erdos_renyi, data::TaskKind::triangles},
                              kRegSquares,
                              kRegTriangles};

Outcome regular_motifs(Synthetic& syn) {
  Outcome out{.pass = true};
  for (const TaskId& id : {kRegTriangles, kRegSquares}) {
    const TaskRuns& r = syn.get(id);
    const bool ok = !r.asc.failed && r.asc.mean >= 0.95 && r.asc_seconds < 1800.0;
    out.pass = out.pass && ok;
    out.detail += fmt("%s%s grn_asc %s in %.0fs", out.detail.empty() ? "" : "; ", id.label().c_str(),
                      mean_std(r.asc).c_str(), r.asc_seconds);
  }
  out.detail += " (need >= 0.95, < 1800s per task)";
  return out;
}

Outcome er_connectivity(Synthetic& syn) {
  const TaskRuns& r = syn.get(kErConnected);
  const bool asc_ok = !r.asc.failed && r.asc.mean >= 0.90;
  const bool gnn_ok = !r.gnn.failed && r.gnn.mean >= 0.55 && r.gnn.mean <= 0.85;
  return {asc_ok && gnn_ok, fmt("grn_asc %s (need >= 0.90); gnn %s (need in [0.55, 0.85])", mean_std(r.asc).c_str(),
                                mean_std(r.gnn).c_str())};
}

Outcome separation(Synthetic& syn) {
  Outcome out{.pass = true};
  for (const TaskId& id : kMotifTasks) {
    const TaskRuns& r = syn.get(id);
    const double gap = r.asc.mean - r.gnn.mean;
    out.pass = out.pass && !r.asc.failed && !r.gnn.failed && gap >= 0.10;
    out.detail += fmt("%s%s %+.3f", out.detail.empty() ? "" : "; ", id.label().c_str(), gap);
  }
  out.detail += " (grn_asc minus gnn, need >= 0.10)";
  return out;
}

Outcome gradient_fidelity() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto r = gt::check_layer_gradient(6, 8, rng);
    worst = std::max({worst, r.input_error, r.rule_error});
  }
  return {worst <= 1e-3, fmt("worst relative error %.2e over 20 instances (k <= 6, m <= 8; need <= 1e-3)", worst)};
}

Outcome mixing_monotone() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> kd(3, 24), md(1, 40);
  int violations = 0;
  double worst_norm = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto r = gt::check_mixing_monotone(kd(rng), md(rng), rng);
    violations += r.monotone ? 0 : 1;
    worst_norm = std::max(worst_norm, r.worst_norm_error);
  }
  return {violations == 0 && worst_norm <= 1e-9,
          fmt("%d of 100 instances increased the objective; worst | |v| - 1 | = %.1e (need 0 and <= 1e-9)", violations,
              worst_norm)};
}

Outcome canonical_soundness() {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> nd(1, 12);
  std::uniform_real_distribution<double> pd(0.05, 0.95);
  int mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = nd(rng);
    const Graph g = gt::random_graph(n, pd(rng), rng);
    if (grn::encode_asc(g, 12) != grn::encode_asc(g.permuted(gt::random_permutation(n, rng)), 12)) ++mismatched;
  }
  int disagreements = 0;
  std::size_t classes = 0;
  for (int n = 1; n <= 5; ++n) {
    std::map<BitString, BitString> oracle_to_ours, ours_to_oracle;
    for (const Graph& g : gt::all_graphs(n)) {
      const BitString ours = grn::encode_asc(g, 12), oracle = gt::brute_force_certificate(g);
      if (oracle_to_ours.emplace(oracle, ours).first->second != ours) ++disagreements;
      if (ours_to_oracle.emplace(ours, oracle).first->second != oracle) ++disagreements;
    }
    classes += oracle_to_ours.size();
  }
  return {mismatched == 0 && disagreements == 0 && classes == 52,
          fmt("%d of 1000 permuted pairs differ; %d disagreements with the all-permutations oracle over %zu classes "
              "on n <= 5",
              mismatched, disagreements, classes)};
}

Outcome motif_oracle() {
  const data::Motif motifs[] = {data::Motif::triangle, data::Motif::square, data::Motif::diamond};
  int mismatched = 0;
  long exhaustive = 0;
  for (int n = 1; n <= 5; ++n)
    for (const Graph& g : gt::all_graphs(n)) {
      ++exhaustive;
      for (auto m : motifs) mismatched += data::count_motif(g, m) == gt::oracle_motif_count(g, m) ? 0 : 1;
    }
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<int> nd(1, 7);
  std::uniform_real_distribution<double> pd(0.1, 0.9);
  for (int i = 0; i < 500; ++i) {
    const Graph g = gt::random_graph(nd(rng), pd(rng), rng);
    for (auto m : motifs) mismatched += data::count_motif(g, m) == gt::oracle_motif_count(g, m) ? 0 : 1;
  }
  return {mismatched == 0, fmt("%d mismatches over %ld exhaustive graphs (n <= 5) and 500 random graphs (n <= 7)",
                               mismatched, exhaustive)};
}

Outcome parity() {
  int fitted = 0;
  std::string scores;
  for (std::uint64_t seed : {0, 1, 2}) {
    const int hits = gt::fit_parity(seed);
    fitted += hits == 8 ? 1 : 0;
    scores += fmt("%s%d/8", scores.empty() ? "" : ", ", hits);
  }
  return {fitted >= 2, fmt("training accuracy %s over seeds 0-2 (need 8/8 in >= 2 seeds)", scores.c_str())};
}

fs::path find_tu(const Settings& s) {
  std::vector<fs::path> roots;
  if (!s.tu_dir.empty()) roots.emplace_back(s.tu_dir);
  if (const char* env = std::getenv("GRN_TU_DIR")) roots.emplace_back(env);
  roots.emplace_back(fs::path(GRN_SOURCE_DIR) / "tests" / "data" / "tu");
  for (const auto& root : roots)
    for (const auto& dir : {root / "NCI1", root})
      if (fs::exists(dir / "NCI1_A.txt")) return dir;
  return {};
}

Outcome real_world(const Settings& s) {
  const fs::path dir = find_tu(s);
  if (dir.empty())
    return {false, "NCI1 files not found (looked in --tu-dir, $GRN_TU_DIR, tests/data/tu); not run"};
  const auto ds = data::load_tu_dataset(dir.string(), "NCI1", 15);
  auto run = [&](h::ModelKind kind, grn::FeatureScheme features) {
    h::TrainConfig base;
    base.model = kind;
    base.n_max = 15;
    base.features = features;
    const bool asc = kind == h::ModelKind::grn_asc;
    base.epochs = asc ? s.asc_epochs : s.gnn_epochs;
    base.patience = asc ? s.asc_patience : s.gnn_patience;
    const h::GraphPool pool(ds, h::pool_options(kind, 15, features, base.max_degree));
    auto report = h::grid_search(base, h::Grid{}, pool, h::SplitPlan{}, {0, 1, 2}, {.jobs = s.jobs, .progress = {}});
    report.dataset = "NCI1";
    return report;
  };
  const auto asc = run(h::ModelKind::grn_asc, grn::FeatureScheme::degree_onehot);
  const auto gnn = run(h::ModelKind::gnn, grn::FeatureScheme::original);
  const bool ok = !asc.failed && !gnn.failed && std::abs(asc.mean - 0.87) <= 0.12 && std::abs(gnn.mean - 0.88) <= 0.10;
  return {ok, fmt("%zu graphs with n <= 15; grn_asc %s (need 0.87 ± 0.12); gnn %s (need 0.88 ± 0.10)", ds.graphs.size(),
                  mean_std(asc).c_str(), mean_std(gnn).c_str())};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism(const Settings& s) {
  if (s.cli.empty()) return {false, "no --cli binary given; not run"};
  const fs::path dir = fs::temp_directory_path() / "grn_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string common =
      " grid --dataset er --task connected --train-size 120 --val-size 40 --test-size 40 --epochs 3 --patience 2"
      " --seeds 0,1 --quiet --m 16,32 --sat-lr 0.01 --hidden 16 --gnn-lr 0.01 --dropout 0,0.3";
  int mismatched = 0, failures = 0;
  for (const std::string model : {"grn_asc", "grn_asc_gnn"}) {
    std::vector<std::string> outputs;
    for (const std::string jobs : {"1", "1", "2"}) {
      const fs::path out = dir / (model + "_" + std::to_string(outputs.size()) + ".json");
      const std::string cmd = "\"" + s.cli + "\"" + common + " --model " + model + " --jobs " + jobs + " --out \"" +
                              out.string() + "\" > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) ++failures;
      outputs.push_back(slurp(out));
    }
    for (std::size_t i = 1; i < outputs.size(); ++i) mismatched += outputs[i] == outputs[0] && !outputs[0].empty() ? 0 : 1;
  }
  fs::remove_all(dir);
  return {mismatched == 0 && failures == 0,
          fmt("%d of 4 repeated grid reports differ from the first run (%d failed invocations); reruns include --jobs 2",
              mismatched, failures)};
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--asc-epochs", s.asc_epochs)->capture_default_str();
  app.add_option("--asc-patience", s.asc_patience)->capture_default_str();
  app.add_option("--gnn-epochs", s.gnn_epochs)->capture_default_str();
  app.add_option("--gnn-patience", s.gnn_patience)->capture_default_str();
  app.add_option("--gnn-features", s.gnn_features, "node features of the synthetic GNN baseline")->capture_default_str();
  app.add_option("--jobs", s.jobs)->capture_default_str();
  app.add_option("--tu-dir", s.tu_dir, "directory holding NCI1/NCI1_*.txt");
  app.add_option("--cli", s.cli, "path to the grn executable");
  app.add_option("--report-dir", s.report_dir, "where synthetic JSON reports go (empty: none)")->capture_default_str();
  app.add_option("--summary", s.summary, "also write the criterion lines to this file");
  CLI11_PARSE(app, argc, argv);
  s.only.insert(only.begin(), only.end());

  Synthetic syn(s);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, [&] { return regular_motifs(syn); }},
      {2, [&] { return er_connectivity(syn); }},
      {3, [&] { return separation(syn); }},
      {4, gradient_fidelity},
      {5, mixing_monotone},
      {6, canonical_soundness},
      {7, motif_oracle},
      {8, parity},
      {9, [&] { return real_world(s); }},
      {10, [&] { return determinism(s); }},
  };
  // cheap criteria first so their lines appear early
  const int order[] = {4, 5, 6, 7, 8, 10, 1, 2, 3, 9};
  std::map<int, Outcome> results;
  std::ofstream summary;
  if (!s.summary.empty()) summary.open(s.summary);
  int failed = 0;
  for (int id : order) {
    if (!s.only.empty() && !s.only.count(id)) continue;
    Outcome out;
    try {
      out = criteria[static_cast<std::size_t>(id - 1)].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    failed += out.pass ? 0 : 1;
    const std::string line = fmt("criterion %d: %s  ", id, out.pass ? "PASS" : "FAIL") + out.detail;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (summary) summary << line << std::endl;
    results[id] = out;
  }
  std::printf("\nsummary\n");
  for (const auto& [id, out] : results) std::printf("criterion %2d: %s\n", id, out.pass ? "PASS" : "FAIL");
  return failed == 0 ? 0 : 1;
}
