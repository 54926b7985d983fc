#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grn/tensor.hpp"

namespace grn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are allocated on the first step and
/// must keep the parameter shapes from then on.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(std::span<Tensor* const> params, std::span<const Tensor> grads);

  const AdamOptions& options() const { return options_; }
  std::int64_t steps() const { return steps_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamOptions options_;
  std::int64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace grn
