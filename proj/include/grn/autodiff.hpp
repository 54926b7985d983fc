#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "grn/tensor.hpp"

namespace grn::ad {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  bool requires_grad() const;
};

/// Accumulates gradients into input_grads[i] (null for inputs that need none).
using BackwardFn = std::function<void(const Tensor& out_grad, std::span<Tensor* const> input_grads)>;

/// Linear record of operations. Node ids are issued in creation order, which
/// is a topological order, so backward() is a single reverse sweep.
///
/// Not thread-safe; use one tape per worker.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records a primitive. The backward function is dropped when no input needs a gradient.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Reverse sweep from a scalar loss. Throws NumericError on non-scalar or
  /// non-finite losses and when a non-finite gradient appears.
  void backward(Var loss);

  /// Gradient of the last backward() w.r.t. v; null when v needs no gradient.
  const Tensor* grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Matrix ops treat rank-1 tensors of length n as 1 x n rows.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var exp(Var a);
/// Clamp with pass-through gradient for saturated entries.
Var clamp(Var a, double lo, double hi);
/// Concatenation along axis 0 (rows) or axis 1 (columns) of rank-2 operands.
Var concat(std::span<const Var> parts, int axis);
/// Mean along an axis of a rank-2 tensor, keeping the reduced axis with extent 1.
Var mean(Var a, int axis);
Var sum(Var a);
inline constexpr double kArccosMargin = 1e-7;
/// arccos of the input clamped to [-1 + kArccosMargin, 1 - kArccosMargin].
Var arccos(Var a);
Var cos(Var a);
Var sin(Var a);
/// Scales every column of a rank-2 tensor to unit L2 norm.
Var normalize_columns(Var a);
/// Single element as a scalar.
Var pick(Var a, std::size_t index);
/// Row-wise log-softmax of a rank-2 tensor.
Var log_softmax_rows(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace grn::ad
