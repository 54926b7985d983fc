#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "grn/checkpoint.hpp"
#include "grn/datasets.hpp"
#include "grn/encoders.hpp"
#include "grn/maxsat.hpp"

namespace grn::harness {

using Rng = std::mt19937_64;

enum class ModelKind { gnn, grn_asc, grn_gnn, grn_asc_gnn };

ModelKind parse_model(const std::string& text);
std::string to_string(ModelKind kind);
FeatureScheme parse_features(const std::string& text);
std::string to_string(FeatureScheme scheme);

bool uses_gnn(ModelKind kind);
bool uses_asc(ModelKind kind);
bool uses_rules(ModelKind kind);

struct GnnHyper {
  int hidden = 32;
  double lr = 0.01;
  double dropout = 0.0;
};

/// m clauses and m auxiliary variables.
struct SatHyper {
  double lr = 0.1;
  int m = 32;
};

struct TrainConfig {
  ModelKind model = ModelKind::grn_asc;
  GnnHyper gnn;
  SatHyper sat;
  FeatureScheme features = FeatureScheme::degree_onehot;
  int max_degree = kDefaultMaxDegree;
  int n_max = 12;
  int epochs = 200;
  int patience = 50;  ///< epochs without a new best validation accuracy before stopping
  int batch_size = 32;
  std::uint64_t seed = 0;
  /// Training backpropagates the last adjoint iterate when it has not converged.
  maxsat::SolverOptions solver{.unroll_fallback = false};

  void validate() const;
};

/// One graph with everything the models read from it precomputed.
struct Example {
  const Graph* graph = nullptr;
  int label = 0;
  Tensor asc;       ///< 1 x upper_length(n_max), empty unless requested
  Tensor features;  ///< node features, empty unless requested
};

/// Labeled graphs with cached model inputs. Every read goes through at(),
/// which reports the index to an optional observer. With several grid jobs
/// the observer is called concurrently.
class GraphPool {
 public:
  struct Options {
    bool asc = true;
    bool features = true;
    int n_max = 12;
    FeatureScheme scheme = FeatureScheme::degree_onehot;
    int max_degree = kDefaultMaxDegree;
  };

  GraphPool(const data::Dataset& dataset, const Options& options);

  std::size_t size() const { return examples_.size(); }
  const Example& at(std::size_t i) const;
  const Options& options() const { return options_; }
  int feature_width() const { return feature_width_; }
  void set_observer(std::function<void(std::size_t)> observer) { observer_ = std::move(observer); }

 private:
  std::shared_ptr<const data::Dataset> owned_;
  std::vector<Example> examples_;
  Options options_;
  int feature_width_ = 0;
  std::function<void(std::size_t)> observer_;
};

/// Pool options that cover what the model kind reads.
GraphPool::Options pool_options(ModelKind kind, int n_max, FeatureScheme scheme, int max_degree = kDefaultMaxDegree);

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle, then val = floor(f_val n) and test = floor(f_test n);
/// the remainder is training data. Throws when any part would be empty.
Split split(std::size_t n, double f_train, double f_val, double f_test, std::uint64_t seed);

/// Seeded shuffle into parts of the given sizes (which must sum to n).
Split split_counts(std::size_t n, std::size_t train, std::size_t val, std::size_t test, std::uint64_t seed);

/// Trained parameters for one configuration.
class Model {
 public:
  Model(const TrainConfig& config, int feature_width);

  const TrainConfig& config() const { return config_; }
  const GnnConfig& gnn_config() const { return gnn_config_; }
  const maxsat::ProblemShape& shape() const { return shape_; }
  GnnParams& gnn() { return gnn_; }
  const GnnParams& gnn() const { return gnn_; }
  maxsat::RuleMatrix& rules() { return rules_; }
  const maxsat::RuleMatrix& rules() const { return rules_; }

  /// Probability of class 1. rng seeds the relaxation's random start.
  double predict(const Example& example, Rng& rng) const;

  NamedTensors checkpoint() const;
  void restore(const NamedTensors& tensors);

 private:
  TrainConfig config_;
  GnnConfig gnn_config_;
  maxsat::ProblemShape shape_;
  GnnParams gnn_;
  maxsat::RuleMatrix rules_;
};

struct EpochStats {
  double loss = 0.0;
  double train_accuracy = 0.0;  ///< on the training batches as they were seen
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::shared_ptr<Model> model;  ///< parameters of the best validation epoch
  std::vector<EpochStats> curve;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;
  long solves = 0;            ///< forward MAX-SAT solves during training
  long converged_solves = 0;  ///< of which met the tolerance
  bool failed = false;
  std::string error;
};

/// Mini-batch Adam with separate learning rates for encoder and rules,
/// early stopping on validation accuracy. Non-finite values end the run with
/// failed = true instead of throwing.
TrainResult train_model(const TrainConfig& config, const GraphPool& pool, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& val);

/// Fraction of graphs whose thresholded prediction equals the label.
/// Deterministic: the relaxation start is seeded from the model's seed.
double evaluate(const Model& model, const GraphPool& pool, const std::vector<std::size_t>& indices);

/// Hyperparameter grid. Models without an encoder ignore the GNN grid and
/// vice versa.
struct Grid {
  std::vector<int> hidden = {32, 64};
  std::vector<double> gnn_lr = {0.01, 0.001};
  std::vector<double> dropout = {0.0, 0.3};
  std::vector<double> sat_lr = {0.1, 0.01};
  std::vector<int> m = {32, 64};
};

/// Configurations in deterministic order: hidden, gnn lr, dropout, sat lr, m
/// (outermost first).
std::vector<TrainConfig> expand_grid(const TrainConfig& base, const Grid& grid);

/// How a dataset is carved up per seed.
struct SplitPlan {
  bool by_count = false;
  std::size_t train = 0, val = 0, test = 0;            ///< when by_count
  double f_train = 0.8, f_val = 0.1, f_test = 0.1;     ///< otherwise
  Split make(std::size_t n, std::uint64_t seed) const;
};

struct ConfigOutcome {
  TrainConfig config;
  double val_accuracy = 0.0;
  double train_accuracy = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  long solves = 0;
  long converged_solves = 0;
  bool failed = false;
  std::string error;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::size_t train_size = 0, val_size = 0, test_size = 0;
  std::vector<ConfigOutcome> configs;
  int selected = -1;  ///< index into configs, -1 when every config failed
  double test_accuracy = 0.0;
};

struct RunReport {
  std::string dataset;
  std::string task;
  TrainConfig base;
  Grid grid;
  SplitPlan plan;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedResult> results;
  double mean = 0.0;
  double stddev = 0.0;  ///< population standard deviation over seeds
  bool failed = false;
};

struct GridOptions {
  int jobs = 1;
  /// Called after every finished configuration, one call at a time, possibly
  /// from a worker thread.
  std::function<void(const SeedResult&, const ConfigOutcome&)> progress;
};

/// For every seed: split, train every grid configuration, keep the best
/// validation accuracy (first wins ties) and test that one configuration once.
/// Results do not depend on the number of jobs.
RunReport grid_search(const TrainConfig& base, const Grid& grid, const GraphPool& pool, const SplitPlan& plan,
                      const std::vector<std::uint64_t>& seeds, const GridOptions& options = {});

/// Deterministic JSON (no timing information).
std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

/// Aligned text table with one row per model and one column per dataset/task.
std::string render_table(const std::vector<RunReport>& reports);

}  // namespace grn::harness
