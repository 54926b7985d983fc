#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/tensor.hpp"

namespace grn::maxsat {

using Rng = std::mt19937_64;

/// Variable counts of a MAX-SAT layer. Column 0 of the rule matrix is the
/// truth direction; then n_in inputs, n_out outputs and n_aux auxiliaries.
struct ProblemShape {
  int n_in = 0;
  int n_out = 1;
  int n_aux = 0;
  int m = 1;

  int num_vars() const { return n_in + n_out + n_aux; }
  int num_columns() const { return num_vars() + 1; }
  int first_output() const { return 1 + n_in; }
  int first_free() const { return 1 + n_in; }
  /// Embedding dimension ceil(sqrt(2(k+1))) + 1, strictly above sqrt(2k).
  int embedding_dim() const;
  void validate() const;
};

/// Learnable clause weights, m x (k+1), with clause j used as
/// w_j / sqrt(4 |w_j|_1).
class RuleMatrix {
 public:
  RuleMatrix() = default;
  explicit RuleMatrix(Tensor weights);
  /// Gaussian initialization with standard deviation sqrt(0.5 / (k + 1 + m)).
  static RuleMatrix random(const ProblemShape& shape, Rng& rng);

  const Tensor& weights() const { return weights_; }
  Tensor& weights() { return weights_; }
  int rows() const { return static_cast<int>(weights_.rows()); }
  int cols() const { return static_cast<int>(weights_.cols()); }

  /// Row-normalized matrix actually used by the solver.
  Tensor normalized() const { return normalize(weights_); }
  static Tensor normalize(const Tensor& weights);
  /// Pulls a gradient w.r.t. the normalized matrix back to the raw weights.
  static Tensor normalize_backward(const Tensor& weights, const Tensor& grad_normalized);

 private:
  Tensor weights_;
};

struct SolverOptions {
  double tolerance = 1e-6;  ///< max column displacement that ends the sweeps
  int max_sweeps = 40;
  bool record_objective = false;
  /// Differentiate the recorded updates when the adjoint iteration does not
  /// settle. Without it the last adjoint iterate is used as is.
  bool unroll_fallback = true;
};

/// Forward state at the (approximate) fixed point, kept for the backward pass.
struct Solution {
  ProblemShape shape;
  int dim = 0;                       ///< embedding dimension K
  std::vector<double> v;             ///< (k+1) unit columns of length K
  std::vector<double> s;             ///< normalized rules, m x (k+1) row-major
  std::vector<double> inputs;        ///< input probabilities
  std::vector<double> input_dirs;    ///< truth-orthogonal random direction per input, n_in x K
  std::vector<double> gnorm;         ///< |g_i| at the final state, per column (0 for fixed ones)
  std::vector<double> probabilities; ///< P{x_i} for i = 1..k
  std::vector<double> objective;     ///< <S^T S, V^T V> at start and after each sweep, when recorded
  std::vector<int> trace_columns;    ///< column touched by each coordinate update, in order
  std::vector<double> trace_previous;///< that column's value before the update, K per entry
  int sweeps = 0;
  bool converged = false;

  std::span<const double> column(int i) const {
    return std::span<const double>(v).subspan(static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim));
  }
  double output_probability(int j) const { return probabilities[static_cast<std::size_t>(shape.n_in + j)]; }
  double objective_value() const;
};

struct Gradients {
  std::vector<double> inputs;  ///< dL/dz for every input probability
  Tensor rules;                ///< dL/dW for the raw rule weights
  bool converged = true;       ///< false when the adjoint iteration did not settle
  bool unrolled = false;       ///< true when the update trace was differentiated instead
};

/// v = -cos(pi z) v_truth + sin(pi z) r with r the normalized projection of a
/// random vector onto the complement of v_truth. Returns v; r is written to dir.
std::vector<double> relax_input(double z, std::span<const double> v_truth, Rng& rng, std::vector<double>* dir = nullptr);

/// P = arccos(-v . v_truth) / pi.
double probability(std::span<const double> v, std::span<const double> v_truth);

/// Threshold at one half: P >= 0.5 maps to 1.
inline int discretize(double p) { return p >= 0.5 ? 1 : 0; }

/// Mixing-method coordinate descent on the relaxed MAX-SAT problem.
/// Inputs are pinned to their relaxed vectors; outputs and auxiliaries are
/// updated in index order until no column moves more than the tolerance.
Solution solve(const RuleMatrix& rules, std::span<const double> inputs, const ProblemShape& shape, Rng& rng,
               const SolverOptions& options = {});

/// Implicit differentiation at the fixed point. dprob holds dL/dP for the n_out outputs.
/// When the adjoint system does not settle (a flat or unconverged optimum) the
/// gradient is taken through the recorded coordinate updates instead.
Gradients backward(const Solution& sol, std::span<const double> dprob, const SolverOptions& options = {});

/// Number of clauses with at least one literal agreeing with x.
/// rules is m x k with entries in {-1, 0, 1}; x has entries in {-1, 1}.
int evaluate_maxsat(const std::vector<std::vector<int>>& rules, std::span<const int> x);

/// Records the layer on a tape. inputs is 1 x n_in, weights is m x (k+1);
/// the result is 1 x n_out output probabilities. The forward state is shared
/// through solution_out when given.
ad::Var layer(ad::Var inputs, ad::Var weights, const ProblemShape& shape, Rng& rng, const SolverOptions& options = {},
              std::shared_ptr<const Solution>* solution_out = nullptr);

}  // namespace grn::maxsat
