#pragma once

// Randomized checks on the MAX-SAT layer shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "grn/adam.hpp"
#include "grn/maxsat.hpp"
#include "support/oracles.hpp"

namespace grn::testing {

struct MixingReport {
  bool monotone = true;
  double worst_norm_error = 0.0;
  double worst_input_error = 0.0;
};

/// Random instance with k variables (half of them inputs) and m clauses.
inline MixingReport check_mixing_monotone(int k, int m, std::mt19937_64& rng) {
  namespace ms = grn::maxsat;
  const int n_in = k / 2;
  ms::ProblemShape shape{.n_in = n_in, .n_out = 1, .n_aux = k - n_in - 1, .m = m};
  const auto seed = rng();
  ms::Rng init(seed);
  const auto rules = ms::RuleMatrix::random(shape, init);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> z(static_cast<std::size_t>(n_in));
  for (double& x : z) x = u(rng);

  ms::Rng a(seed + 1), b(seed + 1);
  const auto start = ms::solve(rules, z, shape, a, {.max_sweeps = 0});
  const auto sol = ms::solve(rules, z, shape, b, {.tolerance = 1e-10, .max_sweeps = 200, .record_objective = true});

  MixingReport report;
  for (std::size_t t = 1; t < sol.objective.size(); ++t)
    if (sol.objective[t] > sol.objective[t - 1] + 1e-12 * std::max(1.0, std::abs(sol.objective[t - 1])))
      report.monotone = false;
  for (int i = 0; i < shape.num_columns(); ++i) {
    double sq = 0.0;
    for (double x : sol.column(i)) sq += x * x;
    report.worst_norm_error = std::max(report.worst_norm_error, std::abs(std::sqrt(sq) - 1.0));
  }
  for (int i = 1; i <= n_in; ++i) {
    const auto before = start.column(i), after = sol.column(i);
    for (std::size_t d = 0; d < before.size(); ++d)
      report.worst_input_error = std::max(report.worst_input_error, std::abs(before[d] - after[d]));
  }
  return report;
}

struct GradientReport {
  double input_error = 0.0;
  double rule_error = 0.0;
};

/// Compares backward() against central differences of L = sum_j c_j P_j.
/// Every forward evaluation reuses the same seed so the random initial
/// state is frozen.
inline GradientReport check_layer_gradient_shape(const grn::maxsat::ProblemShape& shape, std::mt19937_64& rng) {
  namespace ms = grn::maxsat;
  const auto seed = rng();
  ms::Rng init(seed);
  const auto rules = ms::RuleMatrix::random(shape, init);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(static_cast<std::size_t>(shape.n_in)), c(static_cast<std::size_t>(shape.n_out));
  for (double& x : z) x = u(rng);
  for (double& x : c) x = normal(rng);

  const ms::SolverOptions tight{.tolerance = 1e-13, .max_sweeps = 5000};
  auto loss = [&](const ms::RuleMatrix& w, const std::vector<double>& inputs) {
    ms::Rng frozen(seed + 7);
    const auto sol = ms::solve(w, inputs, shape, frozen, tight);
    double total = 0.0;
    for (int j = 0; j < shape.n_out; ++j) total += c[static_cast<std::size_t>(j)] * sol.output_probability(j);
    return total;
  };

  ms::Rng frozen(seed + 7);
  const auto sol = ms::solve(rules, z, shape, frozen, tight);
  const auto grads = ms::backward(sol, c, tight);
  const Tensor analytic_rules = ms::RuleMatrix::normalize_backward(rules.weights(), grads.rules);

  constexpr double h = 1e-6;
  std::vector<double> numeric_inputs(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto up = z, down = z;
    up[i] += h;
    down[i] -= h;
    numeric_inputs[i] = (loss(rules, up) - loss(rules, down)) / (2 * h);
  }
  std::vector<double> numeric_rules(rules.weights().size());
  for (std::size_t i = 0; i < numeric_rules.size(); ++i) {
    ms::RuleMatrix up = rules, down = rules;
    up.weights()[i] += h;
    down.weights()[i] -= h;
    numeric_rules[i] = (loss(up, z) - loss(down, z)) / (2 * h);
  }

  GradientReport report;
  if (!z.empty()) report.input_error = normwise_relative_error(grads.inputs, numeric_inputs, 1e-8);
  report.rule_error = normwise_relative_error(analytic_rules.data(), numeric_rules, 1e-8);
  return report;
}

/// Random shape with 3 <= k <= k_max and 1 <= m <= m_max.
inline GradientReport check_layer_gradient(int k_max, int m_max, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(3, k_max), md(1, m_max);
  const int k = kd(rng);
  const int n_in = std::uniform_int_distribution<int>(1, k - 1)(rng);
  const int n_out = std::uniform_int_distribution<int>(1, k - n_in)(rng);
  return check_layer_gradient_shape({.n_in = n_in, .n_out = n_out, .n_aux = k - n_in - n_out, .m = md(rng)}, rng);
}

/// Trains a layer with m = aux = 32 on the full 3-bit parity table and
/// returns how many of the 8 rows it gets right afterwards.
inline int fit_parity(std::uint64_t seed, int max_epochs = 400) {
  namespace ms = grn::maxsat;
  const ms::ProblemShape shape{.n_in = 3, .n_out = 1, .n_aux = 32, .m = 32};
  ms::Rng rng(seed);
  auto rules = ms::RuleMatrix::random(shape, rng);
  Adam adam({.lr = 0.1});

  auto correct = [&] {
    int hits = 0;
    for (int row = 0; row < 8; ++row) {
      const std::vector<double> z = {double(row & 1), double((row >> 1) & 1), double((row >> 2) & 1)};
      const int y = ((row & 1) ^ ((row >> 1) & 1) ^ ((row >> 2) & 1));
      hits += ms::discretize(ms::solve(rules, z, shape, rng).output_probability(0)) == y ? 1 : 0;
    }
    return hits;
  };

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    Tensor grad(rules.weights().shape(), 0.0);
    for (int row = 0; row < 8; ++row) {
      const std::vector<double> z = {double(row & 1), double((row >> 1) & 1), double((row >> 2) & 1)};
      const double y = ((row & 1) ^ ((row >> 1) & 1) ^ ((row >> 2) & 1));
      const auto sol = ms::solve(rules, z, shape, rng);
      const double p = std::clamp(sol.output_probability(0), 1e-6, 1.0 - 1e-6);
      const std::vector<double> dp = {((p - y) / (p * (1.0 - p))) / 8.0};
      const auto g = ms::backward(sol, dp);
      const Tensor pulled = ms::RuleMatrix::normalize_backward(rules.weights(), g.rules);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pulled[i];
    }
    Tensor* params[] = {&rules.weights()};
    const Tensor grads[] = {grad};
    adam.step(params, grads);
    if (epoch % 20 == 19 && correct() == 8) return 8;
  }
  return correct();
}

}  // namespace grn::testing
