#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "grn/harness.hpp"
#include "json.hpp"

namespace grn::harness {
namespace {

using Json = nlohmann::ordered_json;

Json hyper_json(const TrainConfig& c) {
  Json j;
  if (uses_gnn(c.model)) {
    j["hidden"] = c.gnn.hidden;
    j["gnn_lr"] = c.gnn.lr;
    j["dropout"] = c.gnn.dropout;
  }
  if (uses_rules(c.model)) {
    j["sat_lr"] = c.sat.lr;
    j["m"] = c.sat.m;
    j["aux"] = c.sat.m;
  }
  j["seed"] = c.seed;
  return j;
}

void read_hyper(const Json& j, TrainConfig& c) {
  c.gnn.hidden = j.value("hidden", c.gnn.hidden);
  c.gnn.lr = j.value("gnn_lr", c.gnn.lr);
  c.gnn.dropout = j.value("dropout", c.gnn.dropout);
  c.sat.lr = j.value("sat_lr", c.sat.lr);
  c.sat.m = j.value("m", c.sat.m);
  c.seed = j.value("seed", c.seed);
}

}  // namespace

std::string report_to_json(const RunReport& r) {
  Json j;
  j["dataset"] = r.dataset;
  j["task"] = r.task;
  Json config;
  config["model"] = to_string(r.base.model);
  if (uses_gnn(r.base.model)) {
    config["node_features"] = to_string(r.base.features);
    config["max_degree"] = r.base.max_degree;
  }
  config["n_max"] = r.base.n_max;
  config["epochs"] = r.base.epochs;
  config["patience"] = r.base.patience;
  config["batch_size"] = r.base.batch_size;
  config["solver"] = {{"tolerance", r.base.solver.tolerance}, {"max_sweeps", r.base.solver.max_sweeps},
                      {"unroll_fallback", r.base.solver.unroll_fallback}};
  Json grid;
  if (uses_gnn(r.base.model)) {
    grid["hidden"] = r.grid.hidden;
    grid["gnn_lr"] = r.grid.gnn_lr;
    grid["dropout"] = r.grid.dropout;
  }
  if (uses_rules(r.base.model)) {
    grid["sat_lr"] = r.grid.sat_lr;
    grid["m"] = r.grid.m;
  }
  config["grid"] = grid;
  if (r.plan.by_count)
    config["split"] = {{"train", r.plan.train}, {"val", r.plan.val}, {"test", r.plan.test}};
  else
    config["split"] = {{"train_fraction", r.plan.f_train}, {"val_fraction", r.plan.f_val}, {"test_fraction", r.plan.f_test}};
  j["config"] = config;
  j["seeds"] = r.seeds;

  Json results = Json::array();
  for (const SeedResult& s : r.results) {
    Json sj;
    sj["seed"] = s.seed;
    sj["sizes"] = {{"train", s.train_size}, {"val", s.val_size}, {"test", s.test_size}};
    sj["selected"] = s.selected;
    if (s.selected >= 0) {
      sj["best_config"] = hyper_json(s.configs[static_cast<std::size_t>(s.selected)].config);
      sj["test_accuracy"] = s.test_accuracy;
    } else {
      sj["best_config"] = nullptr;
      sj["test_accuracy"] = nullptr;
    }
    Json configs = Json::array();
    for (const ConfigOutcome& o : s.configs) {
      Json oj = hyper_json(o.config);
      oj["val_accuracy"] = o.val_accuracy;
      oj["train_accuracy"] = o.train_accuracy;
      oj["best_epoch"] = o.best_epoch;
      oj["epochs_run"] = o.epochs_run;
      if (uses_rules(o.config.model)) {
        oj["solves"] = o.solves;
        oj["converged_solves"] = o.converged_solves;
      }
      oj["failed"] = o.failed;
      if (o.failed) oj["error"] = o.error;
      configs.push_back(oj);
    }
    sj["configs"] = configs;
    results.push_back(sj);
  }
  j["results"] = results;
  j["mean"] = r.mean;
  j["std"] = r.stddev;
  j["failed"] = r.failed;
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  RunReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.task = j.value("task", std::string());
  const Json& config = j.at("config");
  r.base.model = parse_model(config.at("model").get<std::string>());
  if (config.contains("node_features")) r.base.features = parse_features(config.at("node_features").get<std::string>());
  r.base.max_degree = config.value("max_degree", r.base.max_degree);
  r.base.n_max = config.value("n_max", r.base.n_max);
  r.base.epochs = config.value("epochs", r.base.epochs);
  r.base.patience = config.value("patience", r.base.patience);
  r.base.batch_size = config.value("batch_size", r.base.batch_size);
  if (config.contains("solver")) {
    r.base.solver.tolerance = config["solver"].value("tolerance", r.base.solver.tolerance);
    r.base.solver.max_sweeps = config["solver"].value("max_sweeps", r.base.solver.max_sweeps);
    r.base.solver.unroll_fallback = config["solver"].value("unroll_fallback", r.base.solver.unroll_fallback);
  }
  const Json& grid = config.at("grid");
  r.grid.hidden = grid.value("hidden", r.grid.hidden);
  r.grid.gnn_lr = grid.value("gnn_lr", r.grid.gnn_lr);
  r.grid.dropout = grid.value("dropout", r.grid.dropout);
  r.grid.sat_lr = grid.value("sat_lr", r.grid.sat_lr);
  r.grid.m = grid.value("m", r.grid.m);
  const Json& split = config.at("split");
  r.plan.by_count = split.contains("train");
  if (r.plan.by_count) {
    r.plan.train = split.at("train").get<std::size_t>();
    r.plan.val = split.at("val").get<std::size_t>();
    r.plan.test = split.at("test").get<std::size_t>();
  } else {
    r.plan.f_train = split.at("train_fraction").get<double>();
    r.plan.f_val = split.at("val_fraction").get<double>();
    r.plan.f_test = split.at("test_fraction").get<double>();
  }
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  for (const Json& sj : j.at("results")) {
    SeedResult s;
    s.seed = sj.at("seed").get<std::uint64_t>();
    s.train_size = sj.at("sizes").at("train").get<std::size_t>();
    s.val_size = sj.at("sizes").at("val").get<std::size_t>();
    s.test_size = sj.at("sizes").at("test").get<std::size_t>();
    s.selected = sj.at("selected").get<int>();
    if (s.selected >= 0) s.test_accuracy = sj.at("test_accuracy").get<double>();
    for (const Json& oj : sj.at("configs")) {
      ConfigOutcome o;
      o.config = r.base;
      read_hyper(oj, o.config);
      o.val_accuracy = oj.at("val_accuracy").get<double>();
      o.train_accuracy = oj.at("train_accuracy").get<double>();
      o.best_epoch = oj.at("best_epoch").get<int>();
      o.epochs_run = oj.at("epochs_run").get<int>();
      o.solves = oj.value("solves", 0L);
      o.converged_solves = oj.value("converged_solves", 0L);
      o.failed = oj.at("failed").get<bool>();
      o.error = oj.value("error", std::string());
      s.configs.push_back(std::move(o));
    }
    r.results.push_back(std::move(s));
  }
  r.mean = j.at("mean").get<double>();
  r.stddev = j.at("std").get<double>();
  r.failed = j.at("failed").get<bool>();
  return r;
}

namespace {

std::size_t display_width(const std::string& s) {
  // count UTF-8 lead bytes
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::string fill(width - std::min(width, display_width(s)), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::string render_table(const std::vector<RunReport>& reports) {
  std::vector<std::string> rows, cols;
  std::map<std::pair<std::string, std::string>, std::string> cells;
  for (const RunReport& r : reports) {
    std::string row = to_string(r.base.model);
    if (uses_gnn(r.base.model)) row += " (" + to_string(r.base.features) + ")";
    const std::string col = r.task.empty() ? r.dataset : r.dataset + " " + r.task;
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
    if (std::find(cols.begin(), cols.end(), col) == cols.end()) cols.push_back(col);
    char buf[64];
    if (r.failed && r.results.empty())
      std::snprintf(buf, sizeof buf, "failed");
    else
      std::snprintf(buf, sizeof buf, "%.2f ± %.2f%s", r.mean, r.stddev, r.failed ? "*" : "");
    cells[{row, col}] = buf;
  }
  std::vector<std::size_t> widths;
  std::size_t first = display_width("Model");
  for (const auto& row : rows) first = std::max(first, display_width(row));
  for (const auto& col : cols) {
    std::size_t w = display_width(col);
    for (const auto& row : rows) {
      auto it = cells.find({row, col});
      if (it != cells.end()) w = std::max(w, display_width(it->second));
    }
    widths.push_back(w);
  }
  std::ostringstream out;
  out << pad("Model", first, true);
  for (std::size_t c = 0; c < cols.size(); ++c) out << "  " << pad(cols[c], widths[c], false);
  out << '\n' << std::string(first, '-');
  for (std::size_t w : widths) out << "  " << std::string(w, '-');
  out << '\n';
  for (const auto& row : rows) {
    out << pad(row, first, true);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      auto it = cells.find({row, cols[c]});
      out << "  " << pad(it == cells.end() ? "-" : it->second, widths[c], false);
    }
    out << '\n';
  }
  bool partial = false;
  for (const RunReport& r : reports) partial = partial || (r.failed && !r.results.empty());
  if (partial) out << "* some seeds had no successful configuration\n";
  return out.str();
}

}  // namespace grn::harness
