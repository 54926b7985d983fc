#include "grn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "grn/adam.hpp"
#include "grn/canonical.hpp"

namespace grn::harness {

ModelKind parse_model(const std::string& text) {
  if (text == "gnn") return ModelKind::gnn;
  if (text == "grn_asc") return ModelKind::grn_asc;
  if (text == "grn_gnn") return ModelKind::grn_gnn;
  if (text == "grn_asc_gnn") return ModelKind::grn_asc_gnn;
  throw std::invalid_argument("unknown model '" + text + "' (gnn, grn_asc, grn_gnn, grn_asc_gnn)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gnn:
      return "gnn";
    case ModelKind::grn_asc:
      return "grn_asc";
    case ModelKind::grn_gnn:
      return "grn_gnn";
    case ModelKind::grn_asc_gnn:
      return "grn_asc_gnn";
  }
  return "?";
}

FeatureScheme parse_features(const std::string& text) {
  if (text == "constant") return FeatureScheme::constant;
  if (text == "degree" || text == "degree_onehot") return FeatureScheme::degree_onehot;
  if (text == "original") return FeatureScheme::original;
  throw std::invalid_argument("unknown node features '" + text + "' (constant, degree, original)");
}

std::string to_string(FeatureScheme scheme) {
  switch (scheme) {
    case FeatureScheme::constant:
      return "constant";
    case FeatureScheme::degree_onehot:
      return "degree";
    case FeatureScheme::original:
      return "original";
  }
  return "?";
}

bool uses_gnn(ModelKind kind) { return kind != ModelKind::grn_asc; }
bool uses_asc(ModelKind kind) { return kind == ModelKind::grn_asc || kind == ModelKind::grn_asc_gnn; }
bool uses_rules(ModelKind kind) { return kind != ModelKind::gnn; }

void TrainConfig::validate() const {
  if (gnn.hidden < 1 || !(gnn.lr > 0.0) || !(gnn.dropout >= 0.0 && gnn.dropout < 1.0))
    throw std::invalid_argument("invalid gnn hyperparameters");
  if (sat.m < 1 || !(sat.lr > 0.0)) throw std::invalid_argument("invalid satnet hyperparameters");
  if (n_max < 2 || n_max > kDefaultMaxCanonicalNodes) throw std::invalid_argument("n_max must lie in [2, 20]");
  if (epochs < 1 || patience < 1 || batch_size < 1) throw std::invalid_argument("epochs, patience and batch size must be positive");
}

namespace {

// Independent stream per (seed, purpose).
Rng derive(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

constexpr std::uint64_t kInitStream = 1, kTrainStream = 2, kEvalStream = 3;
constexpr double kProbFloor = 1e-7;

}  // namespace

GraphPool::GraphPool(const data::Dataset& dataset, const Options& options)
    : owned_(std::make_shared<data::Dataset>(dataset)), options_(options) {
  if (options.features) {
    feature_width_ = options.scheme == FeatureScheme::original ? dataset.node_feature_width
                                                               : grn::feature_width(options.scheme, options.max_degree);
    if (feature_width_ < 1) throw std::invalid_argument(dataset.name + " has no original node features");
  }
  examples_.reserve(owned_->graphs.size());
  for (const Graph& g : owned_->graphs) {
    if (!g.label()) throw std::invalid_argument("graph without a label in " + dataset.name);
    Example ex;
    ex.graph = &g;
    ex.label = *g.label();
    if (options.asc) {
      const BitString bits = encode_asc(g, options.n_max);
      ex.asc = Tensor({1, bits.size()}, std::vector<double>(bits.begin(), bits.end()));
    }
    if (options.features) ex.features = node_feature_init(g, options.scheme, options.max_degree);
    examples_.push_back(std::move(ex));
  }
}

const Example& GraphPool::at(std::size_t i) const {
  if (observer_) observer_(i);
  return examples_.at(i);
}

GraphPool::Options pool_options(ModelKind kind, int n_max, FeatureScheme scheme, int max_degree) {
  return {.asc = uses_asc(kind), .features = uses_gnn(kind), .n_max = n_max, .scheme = scheme, .max_degree = max_degree};
}

Split split_counts(std::size_t n, std::size_t train, std::size_t val, std::size_t test, std::uint64_t seed) {
  if (train + val + test != n) throw std::invalid_argument("split sizes do not add up to the dataset size");
  if (train == 0 || val == 0 || test == 0) throw std::invalid_argument("dataset too small for non-empty splits");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive(seed, 0);
  std::shuffle(order.begin(), order.end(), rng);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(train), order.begin() + static_cast<std::ptrdiff_t>(train + val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train + val), order.end());
  return s;
}

Split split(std::size_t n, double f_train, double f_val, double f_test, std::uint64_t seed) {
  if (f_train < 0 || f_val < 0 || f_test < 0 || std::abs(f_train + f_val + f_test - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  // a small epsilon keeps 0.1 * 300 from flooring to 29
  const auto val = static_cast<std::size_t>(std::floor(f_val * static_cast<double>(n) + 1e-9));
  const auto test = static_cast<std::size_t>(std::floor(f_test * static_cast<double>(n) + 1e-9));
  if (val + test >= n) throw std::invalid_argument("dataset too small for non-empty splits");
  return split_counts(n, n - val - test, val, test, seed);
}

Split SplitPlan::make(std::size_t n, std::uint64_t seed) const {
  return by_count ? split_counts(n, train, val, test, seed) : split(n, f_train, f_val, f_test, seed);
}

Model::Model(const TrainConfig& config, int feature_width) : config_(config) {
  config.validate();
  Rng rng = derive(config.seed, kInitStream);
  if (uses_gnn(config.model)) {
    gnn_config_ = {.input_width = feature_width, .hidden_size = config.gnn.hidden, .dropout = config.gnn.dropout};
    gnn_ = GnnParams::glorot(gnn_config_, rng, config.model == ModelKind::gnn ? 2 : -1);
  }
  if (uses_rules(config.model)) {
    int n_in = 0;
    if (uses_asc(config.model)) n_in += static_cast<int>(upper_length(config.n_max));
    if (uses_gnn(config.model)) n_in += gnn_config_.output_width();
    shape_ = {.n_in = n_in, .n_out = 1, .n_aux = config.sat.m, .m = config.sat.m};
    rules_ = maxsat::RuleMatrix::random(shape_, rng);
  }
}

namespace {

struct Vars {
  GnnVars gnn;
  ad::Var rules;
};

// 1 x d input of the reasoner.
ad::Var reasoner_input(ad::Tape& tape, const Model& model, const Vars& vars, const Example& ex, Mode mode, Rng* rng) {
  const ModelKind kind = model.config().model;
  if (kind == ModelKind::grn_asc) return tape.constant(ex.asc);
  const ad::Var learned = encode_gnn(tape, *ex.graph, ex.features, vars.gnn, model.gnn_config(), mode, rng);
  if (kind == ModelKind::grn_gnn) return learned;
  const ad::Var parts[] = {tape.constant(ex.asc), learned};
  return ad::concat(parts, 1);
}

double positive_probability(const Tensor& logits) {
  const double a = logits[0], b = logits[1];
  return 1.0 / (1.0 + std::exp(a - b));
}

}  // namespace

double Model::predict(const Example& ex, Rng& rng) const {
  ad::Tape tape;
  Vars vars;
  if (uses_gnn(config_.model)) vars.gnn = GnnVars::on(tape, gnn_, false);
  if (config_.model == ModelKind::gnn)
    return positive_probability(gnn_logits(tape, *ex.graph, ex.features, vars.gnn, gnn_config_, Mode::eval, nullptr).value());
  const ad::Var r = reasoner_input(tape, *this, vars, ex, Mode::eval, nullptr);
  return maxsat::solve(rules_, r.value().values(), shape_, rng, config_.solver).output_probability(0);
}

NamedTensors Model::checkpoint() const {
  NamedTensors out;
  if (uses_gnn(config_.model)) out = gnn_.named("gnn.");
  if (uses_rules(config_.model)) out.emplace_back("rules", rules_.weights());
  return out;
}

void Model::restore(const NamedTensors& tensors) {
  auto fits = [](const Tensor& have, const Tensor& got, const std::string& name) {
    if (!have.same_shape(got))
      throw std::invalid_argument("checkpoint tensor " + name + " has shape " + grn::to_string(got.shape()) + ", expected " +
                                  grn::to_string(have.shape()));
  };
  if (uses_gnn(config_.model)) {
    GnnParams loaded = GnnParams::from_named(tensors, "gnn.", gnn_config_.num_layers);
    for (std::size_t l = 0; l < loaded.conv.size(); ++l) fits(gnn_.conv[l], loaded.conv[l], "gnn.conv" + std::to_string(l));
    fits(gnn_.head_weight, loaded.head_weight, "gnn.head_weight");
    fits(gnn_.head_bias, loaded.head_bias, "gnn.head_bias");
    gnn_ = std::move(loaded);
  }
  if (uses_rules(config_.model)) {
    const Tensor& w = find_tensor(tensors, "rules");
    fits(rules_.weights(), w, "rules");
    rules_ = maxsat::RuleMatrix(w);
  }
}

double evaluate(const Model& model, const GraphPool& pool, const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  Rng rng = derive(model.config().seed, kEvalStream);
  std::size_t correct = 0;
  for (std::size_t i : indices) {
    const Example& ex = pool.at(i);
    correct += maxsat::discretize(model.predict(ex, rng)) == ex.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

TrainResult train_model(const TrainConfig& config, const GraphPool& pool, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& val) {
  TrainResult result;
  try {
    if (train.empty()) throw std::invalid_argument("empty training set");
    auto model = std::make_shared<Model>(config, pool.feature_width());
    const bool gnn = uses_gnn(config.model), rules = uses_rules(config.model);
    Rng rng = derive(config.seed, kTrainStream);
    Adam encoder_opt({.lr = config.gnn.lr}), rules_opt({.lr = config.sat.lr});
    std::vector<std::size_t> order = train;
    int stall = 0;
    result.model = std::make_shared<Model>(*model);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double loss_sum = 0.0;
      std::size_t correct = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
        ad::Tape tape;
        Vars vars;
        if (gnn) vars.gnn = GnnVars::on(tape, model->gnn(), true);
        if (rules) vars.rules = tape.leaf(model->rules().weights(), true);
        std::vector<ad::Var> losses;
        for (std::size_t b = start; b < end; ++b) {
          const Example& ex = pool.at(order[b]);
          if (config.model == ModelKind::gnn) {
            const ad::Var logits = gnn_logits(tape, *ex.graph, ex.features, vars.gnn, model->gnn_config(), Mode::train, &rng);
            correct += maxsat::discretize(positive_probability(logits.value())) == ex.label ? 1 : 0;
            losses.push_back(ad::scale(ad::pick(ad::log_softmax_rows(logits), static_cast<std::size_t>(ex.label)), -1.0));
            continue;
          }
          const ad::Var r = reasoner_input(tape, *model, vars, ex, Mode::train, &rng);
          std::shared_ptr<const maxsat::Solution> sol;
          const ad::Var p = ad::clamp(maxsat::layer(r, vars.rules, model->shape(), rng, config.solver, &sol), kProbFloor,
                                      1.0 - kProbFloor);
          ++result.solves;
          result.converged_solves += sol->converged ? 1 : 0;
          correct += maxsat::discretize(sol->output_probability(0)) == ex.label ? 1 : 0;
          // binary cross-entropy on the output probability
          const ad::Var likelihood = ex.label == 1 ? p : ad::add_scalar(ad::scale(p, -1.0), 1.0);
          losses.push_back(ad::scale(ad::log(likelihood), -1.0));
        }
        ad::Var total = losses.front();
        for (std::size_t k = 1; k < losses.size(); ++k) total = total + losses[k];
        const ad::Var loss = ad::scale(total, 1.0 / static_cast<double>(losses.size()));
        tape.backward(loss);
        loss_sum += loss.value().item() * static_cast<double>(losses.size());

        if (gnn) {
          std::vector<Tensor*> params = model->gnn().tensors();
          std::vector<Tensor> grads;
          for (const ad::Var& v : vars.gnn.all()) grads.push_back(*tape.grad(v));
          encoder_opt.step(params, grads);
        }
        if (rules) {
          Tensor* params[] = {&model->rules().weights()};
          const Tensor grads[] = {*tape.grad(vars.rules)};
          rules_opt.step(params, grads);
          if (!model->rules().weights().all_finite()) throw NumericError("rule weights became non-finite");
        }
      }

      EpochStats stats;
      stats.loss = loss_sum / static_cast<double>(order.size());
      stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
      stats.val_accuracy = evaluate(*model, pool, val);
      result.curve.push_back(stats);
      if (result.best_epoch < 0 || stats.val_accuracy > result.best_val_accuracy) {
        result.best_epoch = epoch;
        result.best_val_accuracy = stats.val_accuracy;
        result.model = std::make_shared<Model>(*model);
        stall = 0;
      } else if (++stall >= config.patience) {
        break;
      }
    }
  } catch (const std::exception& e) {
    result.failed = true;
    result.error = e.what();
  }
  return result;
}

std::vector<TrainConfig> expand_grid(const TrainConfig& base, const Grid& grid) {
  const bool gnn = uses_gnn(base.model), rules = uses_rules(base.model);
  std::vector<GnnHyper> gnn_options;
  if (gnn) {
    for (int h : grid.hidden)
      for (double lr : grid.gnn_lr)
        for (double p : grid.dropout) gnn_options.push_back({.hidden = h, .lr = lr, .dropout = p});
  } else {
    gnn_options.push_back(base.gnn);
  }
  std::vector<SatHyper> sat_options;
  if (rules) {
    for (double lr : grid.sat_lr)
      for (int m : grid.m) sat_options.push_back({.lr = lr, .m = m});
  } else {
    sat_options.push_back(base.sat);
  }
  std::vector<TrainConfig> out;
  for (const auto& g : gnn_options)
    for (const auto& s : sat_options) {
      TrainConfig c = base;
      c.gnn = g;
      c.sat = s;
      out.push_back(c);
    }
  if (out.empty()) throw std::invalid_argument("empty hyperparameter grid");
  return out;
}

RunReport grid_search(const TrainConfig& base, const Grid& grid, const GraphPool& pool, const SplitPlan& plan,
                      const std::vector<std::uint64_t>& seeds, const GridOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  const std::vector<TrainConfig> configs = expand_grid(base, grid);
  RunReport report;
  report.base = base;
  report.grid = grid;
  report.plan = plan;
  report.seeds = seeds;

  std::vector<Split> splits;
  for (std::uint64_t seed : seeds) splits.push_back(plan.make(pool.size(), seed));

  struct Job {
    std::size_t seed_index, config_index;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t c = 0; c < configs.size(); ++c) jobs.push_back({s, c});
  std::vector<TrainResult> trained(jobs.size());
  report.results.resize(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    SeedResult& r = report.results[s];
    r.seed = seeds[s];
    r.train_size = splits[s].train.size();
    r.val_size = splits[s].val.size();
    r.test_size = splits[s].test.size();
    r.configs.resize(configs.size());
  }

  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      const Job job = jobs[j];
      TrainConfig config = configs[job.config_index];
      config.seed = seeds[job.seed_index] * 1000 + job.config_index;
      const Split& sp = splits[job.seed_index];
      trained[j] = train_model(config, pool, sp.train, sp.val);
      const TrainResult& t = trained[j];
      ConfigOutcome& o = report.results[job.seed_index].configs[job.config_index];
      o.config = config;
      o.val_accuracy = t.best_val_accuracy;
      o.train_accuracy = t.best_epoch >= 0 ? t.curve[static_cast<std::size_t>(t.best_epoch)].train_accuracy : 0.0;
      o.best_epoch = t.best_epoch;
      o.epochs_run = static_cast<int>(t.curve.size());
      o.solves = t.solves;
      o.converged_solves = t.converged_solves;
      o.failed = t.failed;
      o.error = t.error;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(report.results[job.seed_index], o);
      }
    }
  };
  const int workers = std::clamp(options.jobs, 1, static_cast<int>(jobs.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  // Selection reads validation scores only; the test split is touched once per seed.
  std::vector<double> accuracies;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    SeedResult& r = report.results[s];
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const ConfigOutcome& o = r.configs[c];
      if (o.failed) continue;
      if (r.selected < 0 || o.val_accuracy > r.configs[static_cast<std::size_t>(r.selected)].val_accuracy)
        r.selected = static_cast<int>(c);
    }
    if (r.selected < 0) {
      report.failed = true;
      continue;
    }
    const TrainResult& best = trained[s * configs.size() + static_cast<std::size_t>(r.selected)];
    r.test_accuracy = evaluate(*best.model, pool, splits[s].test);
    accuracies.push_back(r.test_accuracy);
  }
  if (!accuracies.empty()) {
    report.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(accuracies.size());
    double var = 0.0;
    for (double a : accuracies) var += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(var / static_cast<double>(accuracies.size()));
  }
  return report;
}

}  // namespace grn::harness
