// grn: generate datasets, train one configuration, run grid searches and
// render result tables.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "grn/harness.hpp"

namespace fs = std::filesystem;
namespace h = grn::harness;
namespace data = grn::data;

namespace {

struct DatasetArgs {
  std::string dataset = "regular";
  std::string task = "triangles";
  std::string tu_name;
  int n = 12;
  double p = 0.3;
  int degree = 3;
  int threshold = -1;
  int train = 1000, val = 200, test = 200;
  std::uint64_t data_seed = 0;
  bool balanced = false;
  int n_max = 12;

  bool synthetic() const { return dataset == "er" || dataset == "regular"; }

  fs::path tu_dir() const {
    fs::path dir(dataset);
    return dir.filename().empty() ? dir.parent_path() : dir;
  }

  void add(CLI::App* app) {
    app->add_option("--dataset", dataset, "er, regular, or a directory of TU files")->capture_default_str();
    app->add_option("--task", task, "connected, triangles, squares or diamond (synthetic only)")->capture_default_str();
    app->add_option("--tu-name", tu_name, "TU file prefix, defaults to the directory name");
    app->add_option("--n", n, "nodes per synthetic graph")->capture_default_str();
    app->add_option("--p", p, "Erdos-Renyi edge probability")->capture_default_str();
    app->add_option("--degree", degree, "regular graph degree")->capture_default_str();
    app->add_option("--threshold", threshold, "motif count threshold, -1 for the default");
    app->add_option("--train-size", train)->capture_default_str();
    app->add_option("--val-size", val)->capture_default_str();
    app->add_option("--test-size", test)->capture_default_str();
    app->add_option("--data-seed", data_seed, "seed of the synthetic sample")->capture_default_str();
    app->add_flag("--balanced", balanced, "rejection-sample equal label counts");
    app->add_option("--n-max", n_max, "padding size of the adjacency string; larger TU graphs are dropped")
        ->capture_default_str();
  }

  data::Dataset load() const {
    if (!synthetic()) {
      const fs::path dir = tu_dir();
      const std::string name = tu_name.empty() ? dir.filename().string() : tu_name;
      return data::load_tu_dataset(dir.string(), name, n_max);
    }
    const auto family = data::parse_family(dataset);
    auto spec = data::default_spec(family, data::parse_task(task));
    spec.n = n;
    spec.p = p;
    spec.d = degree;
    if (threshold >= 0) spec.task.threshold = threshold;
    spec.train = train;
    spec.val = val;
    spec.test = test;
    spec.seed = data_seed;
    spec.balanced = balanced;
    return data::generate_synthetic(spec);
  }

  h::SplitPlan plan() const {
    if (!synthetic()) return {};
    return {.by_count = true,
            .train = static_cast<std::size_t>(train),
            .val = static_cast<std::size_t>(val),
            .test = static_cast<std::size_t>(test)};
  }

  std::string task_label() const { return synthetic() ? task : std::string(); }
  std::string dataset_label() const { return synthetic() ? dataset : tu_dir().filename().string(); }
};

struct ModelArgs {
  std::string model = "grn_asc";
  std::string features = "degree";
  int max_degree = grn::kDefaultMaxDegree;
  int epochs = 200;
  int patience = 50;
  int batch_size = 32;
  double tolerance = 1e-6;
  int max_sweeps = 40;
  bool exact_backward = false;

  void add(CLI::App* app) {
    app->add_option("--model", model, "gnn, grn_asc, grn_gnn or grn_asc_gnn")->capture_default_str();
    app->add_option("--features", features, "node features: constant, degree or original")->capture_default_str();
    app->add_option("--max-degree", max_degree, "last degree bucket of the one-hot features")->capture_default_str();
    app->add_option("--epochs", epochs)->capture_default_str();
    app->add_option("--patience", patience, "stall epochs before early stopping")->capture_default_str();
    app->add_option("--batch-size", batch_size)->capture_default_str();
    app->add_option("--tolerance", tolerance, "mixing method stopping tolerance")->capture_default_str();
    app->add_option("--max-sweeps", max_sweeps)->capture_default_str();
    app->add_flag("--exact-backward", exact_backward, "unroll the sweeps when the adjoint solve does not converge");
  }

  h::TrainConfig base(int n_max) const {
    h::TrainConfig c;
    c.model = h::parse_model(model);
    c.features = h::parse_features(features);
    c.max_degree = max_degree;
    c.n_max = n_max;
    c.epochs = epochs;
    c.patience = patience;
    c.batch_size = batch_size;
    c.solver.tolerance = tolerance;
    c.solver.max_sweeps = max_sweeps;
    c.solver.unroll_fallback = exact_backward;
    return c;
  }
};

// Flat key=value files: keys outside a section belong to the chosen subcommand.
class SubcommandConfig : public CLI::ConfigINI {
 public:
  explicit SubcommandConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    const auto chosen = app_.get_subcommands();
    if (chosen.empty()) return items;
    for (auto& item : items)
      if (item.parents.empty()) item.parents.push_back(chosen.front()->get_name());
    return items;
  }

 private:
  const CLI::App& app_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph reasoning networks: datasets, training and grid search"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat key=value file with option defaults");
  app.config_formatter(std::make_shared<SubcommandConfig>(app));

  DatasetArgs gen_data;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "write a synthetic dataset in TU format");
  gen_data.add(gen);
  gen->add_option("--out", gen_out, "output directory")->required();

  DatasetArgs train_data;
  ModelArgs train_model;
  h::GnnHyper train_gnn;
  h::SatHyper train_sat;
  std::uint64_t train_seed = 0;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train and test one configuration");
  train_data.add(train);
  train_model.add(train);
  train->add_option("--hidden", train_gnn.hidden)->capture_default_str();
  train->add_option("--gnn-lr", train_gnn.lr)->capture_default_str();
  train->add_option("--dropout", train_gnn.dropout)->capture_default_str();
  train->add_option("--sat-lr", train_sat.lr)->capture_default_str();
  train->add_option("--m", train_sat.m, "clauses and auxiliary variables")->capture_default_str();
  train->add_option("--seed", train_seed)->capture_default_str();
  train->add_option("--out", train_out, "checkpoint file for the best validation epoch");

  DatasetArgs grid_data;
  ModelArgs grid_model;
  h::Grid grid;
  std::vector<std::uint64_t> grid_seeds = {0, 1, 2};
  int grid_jobs = 1;
  std::string grid_out;
  bool quiet = false;
  auto* grid_cmd = app.add_subcommand("grid", "grid search over several seeds");
  grid_data.add(grid_cmd);
  grid_model.add(grid_cmd);
  grid_cmd->add_option("--seeds", grid_seeds)->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--jobs", grid_jobs, "worker threads")->capture_default_str();
  grid_cmd->add_option("--hidden", grid.hidden)->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--gnn-lr", grid.gnn_lr)->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--dropout", grid.dropout)->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--sat-lr", grid.sat_lr)->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--m", grid.m, "clauses and auxiliary variables")->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--out", grid_out, "JSON report");
  grid_cmd->add_flag("--quiet", quiet, "no progress lines");

  std::vector<std::string> report_files;
  auto* report = app.add_subcommand("report", "render JSON reports as a table");
  report->add_option("reports", report_files, "JSON files written by grid")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (!gen_data.synthetic()) throw std::invalid_argument("gen needs --dataset er or regular");
      auto ds = gen_data.load();
      ds.name = gen_data.dataset + "_" + gen_data.task;
      fs::create_directories(gen_out);
      data::write_tu_dataset(gen_out, ds);
      long positive = 0;
      for (const auto& g : ds.graphs) positive += *g.label();
      std::printf("wrote %zu graphs (%ld positive) to %s/%s_*.txt\n", ds.graphs.size(), positive, gen_out.c_str(),
                  ds.name.c_str());
      return 0;
    }

    if (*train) {
      const auto start = std::chrono::steady_clock::now();
      const auto ds = train_data.load();
      h::TrainConfig config = train_model.base(train_data.n_max);
      config.gnn = train_gnn;
      config.sat = train_sat;
      config.seed = train_seed;
      const h::GraphPool pool(ds, h::pool_options(config.model, config.n_max, config.features, config.max_degree));
      const auto split = train_data.plan().make(pool.size(), train_seed);
      const auto result = h::train_model(config, pool, split.train, split.val);
      for (std::size_t e = 0; e < result.curve.size(); ++e)
        std::printf("epoch %3zu  loss %.4f  train %.3f  val %.3f\n", e, result.curve[e].loss,
                    result.curve[e].train_accuracy, result.curve[e].val_accuracy);
      if (result.failed) {
        std::fprintf(stderr, "training failed: %s\n", result.error.c_str());
        return 1;
      }
      const double test = h::evaluate(*result.model, pool, split.test);
      std::printf("best epoch %d  val %.3f  test %.3f\n", result.best_epoch, result.best_val_accuracy, test);
      if (result.solves > 0)
        std::printf("solver converged on %ld of %ld training solves\n", result.converged_solves, result.solves);
      if (!train_out.empty()) grn::save_checkpoint(train_out, result.model->checkpoint());
      std::fprintf(stderr, "wall-clock %.1fs\n", seconds_since(start));
      return 0;
    }

    if (*grid_cmd) {
      const auto start = std::chrono::steady_clock::now();
      const auto ds = grid_data.load();
      const h::TrainConfig base = grid_model.base(grid_data.n_max);
      const h::GraphPool pool(ds, h::pool_options(base.model, base.n_max, base.features, base.max_degree));
      h::GridOptions options;
      options.jobs = grid_jobs;
      if (!quiet)
        options.progress = [](const h::SeedResult& s, const h::ConfigOutcome& o) {
          std::fprintf(stderr, "seed %llu  config %llu  val %.3f  epochs %d%s\n",
                       static_cast<unsigned long long>(s.seed), static_cast<unsigned long long>(o.config.seed % 1000),
                       o.val_accuracy, o.epochs_run, o.failed ? ("  failed: " + o.error).c_str() : "");
        };
      auto run = h::grid_search(base, grid, pool, grid_data.plan(), grid_seeds, options);
      run.dataset = grid_data.dataset_label();
      run.task = grid_data.task_label();
      const std::string json = h::report_to_json(run);
      if (grid_out.empty()) {
        std::cout << json;
      } else {
        write_file(grid_out, json);
        std::cout << h::render_table({run});
      }
      std::fprintf(stderr, "wall-clock %.1fs\n", seconds_since(start));
      return run.failed ? 2 : 0;
    }

    if (*report) {
      std::vector<h::RunReport> runs;
      for (const auto& path : report_files) runs.push_back(h::report_from_json(read_file(path)));
      std::cout << h::render_table(runs);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
