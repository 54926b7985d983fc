#include "grn/adam.hpp"

#include <cmath>

namespace grn {

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) throw NumericError("adam: parameter and gradient counts differ");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape(), 0.0);
      v_.emplace_back(p->shape(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw NumericError("adam: parameter count changed between steps");
  ++steps_;
  const auto& o = options_;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    if (!p.same_shape(g) || !p.same_shape(m_[k]))
      throw NumericError("adam: shape mismatch for parameter " + std::to_string(k));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[k][i] = o.beta1 * m_[k][i] + (1.0 - o.beta1) * g[i];
      v_[k][i] = o.beta2 * v_[k][i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m_[k][i] / c1;
      const double v_hat = v_[k][i] / c2;
      p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace grn
