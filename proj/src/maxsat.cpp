#include "grn/maxsat.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace grn::maxsat {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenerateNorm = 1e-12;

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void random_unit(double* out, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (int i = 0; i < n; ++i) {
      out[i] = normal(rng);
      norm += out[i] * out[i];
    }
  } while (norm < 1e-20);
  norm = std::sqrt(norm);
  for (int i = 0; i < n; ++i) out[i] /= norm;
}

// d arccos(c) / dc evaluated inside the clamping margin so it stays finite.
double arccos_slope(double c) {
  const double cc = std::clamp(c, -1.0 + ad::kArccosMargin, 1.0 - ad::kArccosMargin);
  return -1.0 / std::sqrt(1.0 - cc * cc);
}

Solution solve_normalized(const Tensor& s_norm, std::span<const double> inputs, const ProblemShape& shape, Rng& rng,
                          const SolverOptions& options) {
  shape.validate();
  if (inputs.size() != static_cast<std::size_t>(shape.n_in))
    throw std::invalid_argument("maxsat: expected " + std::to_string(shape.n_in) + " inputs, got " +
                                std::to_string(inputs.size()));
  const int m = shape.m;
  const int cols = shape.num_columns();
  if (static_cast<int>(s_norm.rows()) != m || static_cast<int>(s_norm.cols()) != cols)
    throw std::invalid_argument("maxsat: rule matrix shape " + to_string(s_norm.shape()) + " does not match problem");
  const int dim = shape.embedding_dim();

  Solution sol;
  sol.shape = shape;
  sol.dim = dim;
  sol.s = s_norm.data();
  sol.inputs.assign(inputs.begin(), inputs.end());
  sol.v.assign(static_cast<std::size_t>(cols) * dim, 0.0);
  sol.input_dirs.assign(static_cast<std::size_t>(shape.n_in) * dim, 0.0);
  sol.gnorm.assign(static_cast<std::size_t>(cols), 0.0);

  double* v = sol.v.data();
  v[0] = 1.0;  // truth direction e_1
  std::vector<double> dir;
  for (int i = 0; i < shape.n_in; ++i) {
    const double z = inputs[static_cast<std::size_t>(i)];
    if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("maxsat: input probability outside [0, 1]");
    auto col = relax_input(z, std::span<const double>(v, static_cast<std::size_t>(dim)), rng, &dir);
    std::copy(col.begin(), col.end(), v + static_cast<std::size_t>(1 + i) * dim);
    std::copy(dir.begin(), dir.end(), sol.input_dirs.begin() + static_cast<std::ptrdiff_t>(i) * dim);
  }
  for (int i = shape.first_free(); i < cols; ++i) random_unit(v + static_cast<std::size_t>(i) * dim, dim, rng);

  // st: columns of S as contiguous rows; omega: V S^T stored clause-major.
  std::vector<double> st(static_cast<std::size_t>(cols) * m);
  std::vector<double> col_sq(static_cast<std::size_t>(cols), 0.0);
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < cols; ++i) {
      const double w = sol.s[static_cast<std::size_t>(r) * cols + i];
      st[static_cast<std::size_t>(i) * m + r] = w;
      col_sq[static_cast<std::size_t>(i)] += w * w;
    }
  std::vector<double> omega(static_cast<std::size_t>(m) * dim, 0.0);
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < cols; ++i) {
      const double w = sol.s[static_cast<std::size_t>(r) * cols + i];
      if (w != 0.0) axpy(w, v + static_cast<std::size_t>(i) * dim, omega.data() + static_cast<std::size_t>(r) * dim, dim);
    }

  auto objective = [&] {
    double total = 0.0;
    for (int r = 0; r < m; ++r) {
      const double* o = omega.data() + static_cast<std::size_t>(r) * dim;
      total += dot(o, o, dim);
    }
    return total;
  };

  std::vector<double> g(static_cast<std::size_t>(dim));
  std::vector<double> delta(static_cast<std::size_t>(dim));
  if (options.record_objective) sol.objective.push_back(objective());
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (int o = shape.first_free(); o < cols; ++o) {
      const double* so = st.data() + static_cast<std::size_t>(o) * m;
      double* vo = v + static_cast<std::size_t>(o) * dim;
      // g_o = V S^T s_o - |s_o|^2 v_o
      for (int d = 0; d < dim; ++d) g[static_cast<std::size_t>(d)] = -col_sq[static_cast<std::size_t>(o)] * vo[d];
      for (int r = 0; r < m; ++r)
        if (so[r] != 0.0) axpy(so[r], omega.data() + static_cast<std::size_t>(r) * dim, g.data(), dim);
      const double gn = std::sqrt(dot(g.data(), g.data(), dim));
      if (gn < kDegenerateNorm) continue;  // any direction is optimal; keep the column
      sol.trace_columns.push_back(o);
      sol.trace_previous.insert(sol.trace_previous.end(), vo, vo + dim);
      double move = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double nv = -g[static_cast<std::size_t>(d)] / gn;
        delta[static_cast<std::size_t>(d)] = nv - vo[d];
        move += delta[static_cast<std::size_t>(d)] * delta[static_cast<std::size_t>(d)];
        vo[d] = nv;
      }
      for (int r = 0; r < m; ++r)
        if (so[r] != 0.0) axpy(so[r], delta.data(), omega.data() + static_cast<std::size_t>(r) * dim, dim);
      max_move = std::max(max_move, std::sqrt(move));
    }
    sol.sweeps = sweep + 1;
    if (options.record_objective) sol.objective.push_back(objective());
    if (max_move < options.tolerance) {
      sol.converged = true;
      break;
    }
  }

  // Final |g_o| from a freshly accumulated omega to avoid drift.
  std::fill(omega.begin(), omega.end(), 0.0);
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < cols; ++i) {
      const double w = sol.s[static_cast<std::size_t>(r) * cols + i];
      if (w != 0.0) axpy(w, v + static_cast<std::size_t>(i) * dim, omega.data() + static_cast<std::size_t>(r) * dim, dim);
    }
  for (int o = shape.first_free(); o < cols; ++o) {
    const double* so = st.data() + static_cast<std::size_t>(o) * m;
    const double* vo = v + static_cast<std::size_t>(o) * dim;
    for (int d = 0; d < dim; ++d) g[static_cast<std::size_t>(d)] = -col_sq[static_cast<std::size_t>(o)] * vo[d];
    for (int r = 0; r < m; ++r)
      if (so[r] != 0.0) axpy(so[r], omega.data() + static_cast<std::size_t>(r) * dim, g.data(), dim);
    sol.gnorm[static_cast<std::size_t>(o)] = std::sqrt(dot(g.data(), g.data(), dim));
  }

  sol.probabilities.resize(static_cast<std::size_t>(shape.num_vars()));
  const std::span<const double> truth(v, static_cast<std::size_t>(dim));
  for (int i = 1; i < cols; ++i)
    sol.probabilities[static_cast<std::size_t>(i - 1)] = probability(sol.column(i), truth);
  return sol;
}

// dL/dz from dL/dv for each pinned input column; dv/dz = pi sin(pi z) v_truth + pi cos(pi z) dir.
std::vector<double> input_gradients(const Solution& sol, const std::vector<double>& dv) {
  const int dim = sol.dim;
  const double* truth = sol.v.data();
  std::vector<double> out(static_cast<std::size_t>(sol.shape.n_in));
  for (int i = 0; i < sol.shape.n_in; ++i) {
    const double* t = dv.data() + static_cast<std::size_t>(1 + i) * dim;
    const double z = sol.inputs[static_cast<std::size_t>(i)];
    const double* dir = sol.input_dirs.data() + static_cast<std::size_t>(i) * dim;
    out[static_cast<std::size_t>(i)] = kPi * std::sin(kPi * z) * dot(t, truth, dim) + kPi * std::cos(kPi * z) * dot(t, dir, dim);
  }
  return out;
}

// Reverse pass through the recorded updates v_o <- -g / |g|, g = sum_{i != o} (S^T S)_oi v_i.
Gradients unrolled_backward(const Solution& sol, const std::vector<double>& st, std::vector<double> adj) {
  const int m = sol.shape.m, cols = sol.shape.num_columns(), dim = sol.dim;
  std::vector<double> gram(static_cast<std::size_t>(cols) * cols, 0.0);
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j < cols; ++j)
      gram[static_cast<std::size_t>(i) * cols + j] =
          dot(st.data() + static_cast<std::size_t>(i) * m, st.data() + static_cast<std::size_t>(j) * m, m);

  std::vector<double> v = sol.v;
  std::vector<double> gram_adj(static_cast<std::size_t>(cols) * cols, 0.0);
  std::vector<double> g(static_cast<std::size_t>(dim)), gbar(static_cast<std::size_t>(dim));
  for (std::size_t t = sol.trace_columns.size(); t-- > 0;) {
    const int o = sol.trace_columns[t];
    double* vo = v.data() + static_cast<std::size_t>(o) * dim;
    double* ao = adj.data() + static_cast<std::size_t>(o) * dim;
    std::fill(g.begin(), g.end(), 0.0);
    for (int i = 0; i < cols; ++i)
      if (i != o) axpy(gram[static_cast<std::size_t>(o) * cols + i], v.data() + static_cast<std::size_t>(i) * dim, g.data(), dim);
    const double gn = std::sqrt(dot(g.data(), g.data(), dim));
    const double along = dot(vo, ao, dim);
    for (int d = 0; d < dim; ++d) gbar[static_cast<std::size_t>(d)] = -(ao[d] - along * vo[d]) / gn;
    std::fill(ao, ao + dim, 0.0);
    for (int i = 0; i < cols; ++i) {
      if (i == o) continue;
      const double* vi = v.data() + static_cast<std::size_t>(i) * dim;
      axpy(gram[static_cast<std::size_t>(o) * cols + i], gbar.data(), adj.data() + static_cast<std::size_t>(i) * dim, dim);
      gram_adj[static_cast<std::size_t>(o) * cols + i] += dot(gbar.data(), vi, dim);
    }
    std::copy_n(sol.trace_previous.begin() + static_cast<std::ptrdiff_t>(t) * dim, dim, vo);
  }

  Gradients out;
  out.unrolled = true;
  out.inputs = input_gradients(sol, adj);
  out.rules = Tensor({static_cast<std::size_t>(m), static_cast<std::size_t>(cols)}, 0.0);
  // d<G, Gbar>/dS = S (Gbar + Gbar^T)
  for (int r = 0; r < m; ++r)
    for (int j = 0; j < cols; ++j) {
      double val = 0.0;
      for (int i = 0; i < cols; ++i)
        val += sol.s[static_cast<std::size_t>(r) * cols + i] *
               (gram_adj[static_cast<std::size_t>(i) * cols + j] + gram_adj[static_cast<std::size_t>(j) * cols + i]);
      out.rules[static_cast<std::size_t>(r) * cols + j] = val;
    }
  return out;
}

}  // namespace

int ProblemShape::embedding_dim() const {
  return static_cast<int>(std::ceil(std::sqrt(2.0 * (num_vars() + 1)))) + 1;
}

void ProblemShape::validate() const {
  if (n_in < 0 || n_out < 1 || n_aux < 0 || m < 1)
    throw std::invalid_argument("maxsat: need n_in >= 0, n_out >= 1, n_aux >= 0, m >= 1");
}

RuleMatrix::RuleMatrix(Tensor weights) : weights_(std::move(weights)) {
  if (weights_.rank() != 2) throw std::invalid_argument("rule matrix must be rank 2");
  if (!weights_.all_finite()) throw NumericError("rule matrix has non-finite entries");
}

RuleMatrix RuleMatrix::random(const ProblemShape& shape, Rng& rng) {
  shape.validate();
  const auto m = static_cast<std::size_t>(shape.m);
  const auto cols = static_cast<std::size_t>(shape.num_columns());
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 / static_cast<double>(cols + m)));
  Tensor w({m, cols});
  for (double& x : w.values()) x = normal(rng);
  return RuleMatrix(std::move(w));
}

Tensor RuleMatrix::normalize(const Tensor& weights) {
  Tensor out(weights.shape(), 0.0);
  const std::size_t rows = weights.rows(), cols = weights.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    double l1 = 0.0;
    for (std::size_t c = 0; c < cols; ++c) l1 += std::abs(weights[r * cols + c]);
    if (l1 == 0.0) continue;
    const double f = 1.0 / std::sqrt(4.0 * l1);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = weights[r * cols + c] * f;
  }
  return out;
}

Tensor RuleMatrix::normalize_backward(const Tensor& weights, const Tensor& grad_normalized) {
  Tensor out(weights.shape(), 0.0);
  const std::size_t rows = weights.rows(), cols = weights.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    double l1 = 0.0, gw = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      l1 += std::abs(weights[r * cols + c]);
      gw += grad_normalized[r * cols + c] * weights[r * cols + c];
    }
    if (l1 == 0.0) continue;
    const double f = 1.0 / std::sqrt(4.0 * l1);
    const double df = -2.0 * f * f * f;  // d(4 l1)^(-1/2) / d l1
    for (std::size_t c = 0; c < cols; ++c) {
      const double w = weights[r * cols + c];
      const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
      out[r * cols + c] = f * grad_normalized[r * cols + c] + sign * df * gw;
    }
  }
  return out;
}

double Solution::objective_value() const {
  const int m = shape.m, cols = shape.num_columns();
  std::vector<double> omega(static_cast<std::size_t>(dim));
  double total = 0.0;
  for (int r = 0; r < m; ++r) {
    std::fill(omega.begin(), omega.end(), 0.0);
    for (int i = 0; i < cols; ++i) axpy(s[static_cast<std::size_t>(r) * cols + i], v.data() + static_cast<std::size_t>(i) * dim, omega.data(), dim);
    total += dot(omega.data(), omega.data(), dim);
  }
  return total;
}

std::vector<double> relax_input(double z, std::span<const double> v_truth, Rng& rng, std::vector<double>* dir) {
  const int dim = static_cast<int>(v_truth.size());
  std::vector<double> r(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    random_unit(r.data(), dim, rng);
    const double along = dot(r.data(), v_truth.data(), dim);
    axpy(-along, v_truth.data(), r.data(), dim);
    norm = std::sqrt(dot(r.data(), r.data(), dim));
  } while (norm < 1e-8);
  for (double& x : r) x /= norm;
  const double c = -std::cos(kPi * z), s = std::sin(kPi * z);
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) out[static_cast<std::size_t>(d)] = c * v_truth[static_cast<std::size_t>(d)] + s * r[static_cast<std::size_t>(d)];
  if (dir) *dir = std::move(r);
  return out;
}

double probability(std::span<const double> v, std::span<const double> v_truth) {
  const double c = -dot(v.data(), v_truth.data(), static_cast<int>(v.size()));
  return std::acos(std::clamp(c, -1.0, 1.0)) / kPi;
}

Solution solve(const RuleMatrix& rules, std::span<const double> inputs, const ProblemShape& shape, Rng& rng,
               const SolverOptions& options) {
  return solve_normalized(rules.normalized(), inputs, shape, rng, options);
}

Gradients backward(const Solution& sol, std::span<const double> dprob, const SolverOptions& options) {
  const ProblemShape& shape = sol.shape;
  if (dprob.size() != static_cast<std::size_t>(shape.n_out)) throw std::invalid_argument("maxsat: dprob size mismatch");
  const int m = shape.m, cols = shape.num_columns(), dim = sol.dim;
  const double* v = sol.v.data();
  const double* truth = v;

  std::vector<double> st(static_cast<std::size_t>(cols) * m);
  std::vector<double> col_sq(static_cast<std::size_t>(cols), 0.0);
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < cols; ++i) {
      const double w = sol.s[static_cast<std::size_t>(r) * cols + i];
      st[static_cast<std::size_t>(i) * m + r] = w;
      col_sq[static_cast<std::size_t>(i)] += w * w;
    }

  // dL/dv_o for outputs; auxiliaries carry no direct loss.
  std::vector<double> w(static_cast<std::size_t>(cols) * dim, 0.0);
  bool any = false;
  for (int j = 0; j < shape.n_out; ++j) {
    const double gp = dprob[static_cast<std::size_t>(j)];
    if (gp == 0.0) continue;
    any = true;
    const int o = shape.first_output() + j;
    const double c = -dot(v + static_cast<std::size_t>(o) * dim, truth, dim);
    // P = acos(c)/pi, c = -v.t  =>  dP/dv = -arccos_slope(c)/pi * t
    const double coeff = -gp * arccos_slope(c) / kPi;
    axpy(coeff, truth, w.data() + static_cast<std::size_t>(o) * dim, dim);
  }

  Gradients out;
  out.inputs.assign(static_cast<std::size_t>(shape.n_in), 0.0);
  out.rules = Tensor({static_cast<std::size_t>(m), static_cast<std::size_t>(cols)}, 0.0);
  if (!any) return out;

  // Solve (D + P C P) u = P w on the free columns by Gauss-Seidel.
  std::vector<double> u(static_cast<std::size_t>(cols) * dim, 0.0);
  std::vector<double> psi(static_cast<std::size_t>(m) * dim, 0.0);
  std::vector<double> t(static_cast<std::size_t>(dim)), delta(static_cast<std::size_t>(dim));
  const int max_sweeps = std::max(options.max_sweeps, 1);
  out.converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0, max_norm = 0.0;
    for (int o = shape.first_free(); o < cols; ++o) {
      const double gn = sol.gnorm[static_cast<std::size_t>(o)];
      if (gn < kDegenerateNorm) continue;
      const double* so = st.data() + static_cast<std::size_t>(o) * m;
      const double* vo = v + static_cast<std::size_t>(o) * dim;
      double* uo = u.data() + static_cast<std::size_t>(o) * dim;
      const double* wo = w.data() + static_cast<std::size_t>(o) * dim;
      for (int d = 0; d < dim; ++d) t[static_cast<std::size_t>(d)] = wo[d] + col_sq[static_cast<std::size_t>(o)] * uo[d];
      for (int r = 0; r < m; ++r)
        if (so[r] != 0.0) axpy(-so[r], psi.data() + static_cast<std::size_t>(r) * dim, t.data(), dim);
      const double along = dot(t.data(), vo, dim);
      double move = 0.0, norm = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double nu = (t[static_cast<std::size_t>(d)] - along * vo[d]) / gn;
        delta[static_cast<std::size_t>(d)] = nu - uo[d];
        move += delta[static_cast<std::size_t>(d)] * delta[static_cast<std::size_t>(d)];
        norm += nu * nu;
        uo[d] = nu;
      }
      for (int r = 0; r < m; ++r)
        if (so[r] != 0.0) axpy(so[r], delta.data(), psi.data() + static_cast<std::size_t>(r) * dim, dim);
      max_move = std::max(max_move, std::sqrt(move));
      max_norm = std::max(max_norm, std::sqrt(norm));
    }
    if (!std::isfinite(max_move)) break;
    if (max_move < options.tolerance * std::max(1.0, max_norm)) {
      out.converged = true;
      break;
    }
  }
  const bool finite = std::all_of(u.begin(), u.end(), [](double x) { return std::isfinite(x); });
  if (!finite || (!out.converged && options.unroll_fallback)) return unrolled_backward(sol, st, std::move(w));

  // Fresh psi = U S^T and omega = V S^T.
  std::vector<double> omega(static_cast<std::size_t>(m) * dim, 0.0);
  std::fill(psi.begin(), psi.end(), 0.0);
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < cols; ++i) {
      const double s = sol.s[static_cast<std::size_t>(r) * cols + i];
      if (s == 0.0) continue;
      axpy(s, v + static_cast<std::size_t>(i) * dim, omega.data() + static_cast<std::size_t>(r) * dim, dim);
      if (i >= shape.first_free())
        axpy(s, u.data() + static_cast<std::size_t>(i) * dim, psi.data() + static_cast<std::size_t>(r) * dim, dim);
    }

  // dL/dS = -(Omega^T U + Psi^T V)
  for (int r = 0; r < m; ++r) {
    const double* om = omega.data() + static_cast<std::size_t>(r) * dim;
    const double* ps = psi.data() + static_cast<std::size_t>(r) * dim;
    for (int i = 0; i < cols; ++i) {
      double val = dot(ps, v + static_cast<std::size_t>(i) * dim, dim);
      if (i >= shape.first_free()) val += dot(om, u.data() + static_cast<std::size_t>(i) * dim, dim);
      out.rules[static_cast<std::size_t>(r) * cols + i] = -val;
    }
  }

  // dL/dv_i = -Psi s_i for the pinned inputs.
  std::vector<double> dv(static_cast<std::size_t>(cols) * dim, 0.0);
  for (int i = 1; i <= shape.n_in; ++i) {
    const double* si = st.data() + static_cast<std::size_t>(i) * m;
    for (int r = 0; r < m; ++r)
      if (si[r] != 0.0) axpy(-si[r], psi.data() + static_cast<std::size_t>(r) * dim, dv.data() + static_cast<std::size_t>(i) * dim, dim);
  }
  out.inputs = input_gradients(sol, dv);
  return out;
}

int evaluate_maxsat(const std::vector<std::vector<int>>& rules, std::span<const int> x) {
  int satisfied = 0;
  for (const auto& clause : rules) {
    if (clause.size() != x.size()) throw std::invalid_argument("evaluate_maxsat: clause width differs from assignment");
    for (std::size_t i = 0; i < clause.size(); ++i)
      if (clause[i] * x[i] > 0) {
        ++satisfied;
        break;
      }
  }
  return satisfied;
}

ad::Var layer(ad::Var inputs, ad::Var weights, const ProblemShape& shape, Rng& rng, const SolverOptions& options,
              std::shared_ptr<const Solution>* solution_out) {
  const Tensor& w = weights.value();
  auto sol = std::make_shared<Solution>(solve_normalized(RuleMatrix::normalize(w), inputs.value().values(), shape, rng, options));
  Tensor out({1, static_cast<std::size_t>(shape.n_out)});
  for (int j = 0; j < shape.n_out; ++j) out[static_cast<std::size_t>(j)] = sol->output_probability(j);
  if (solution_out) *solution_out = sol;
  return inputs.tape->record(std::move(out), {inputs, weights},
                             [sol, weights, options](const Tensor& g, std::span<Tensor* const> grads) {
                               Gradients back = backward(*sol, g.values(), options);
                               if (Tensor* gi = grads[0])
                                 for (std::size_t i = 0; i < back.inputs.size(); ++i) (*gi)[i] += back.inputs[i];
                               if (Tensor* gw = grads[1]) {
                                 Tensor pulled = RuleMatrix::normalize_backward(weights.value(), back.rules);
                                 for (std::size_t i = 0; i < pulled.size(); ++i) (*gw)[i] += pulled[i];
                               }
                             });
}

}  // namespace grn::maxsat
