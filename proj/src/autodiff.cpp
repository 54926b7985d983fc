#include "grn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grn::ad {

const Tensor& Var::value() const { return tape->value(*this); }
bool Var::requires_grad() const { return tape->requires_grad(*this); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("non-finite value in leaf tensor");
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, {}, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced by primitive");
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape != this) throw NumericError("operands recorded on different tapes");
    node.inputs.push_back(in.id);
    node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  Node& root = nodes_[loss.id];
  if (root.value.size() != 1) throw NumericError("backward() needs a scalar loss, got shape " + to_string(root.value.shape()));
  if (!root.value.all_finite()) throw NumericError("loss is not finite");
  for (auto& node : nodes_) node.grad = node.requires_grad ? Tensor(node.value.shape(), 0.0) : Tensor{};
  if (!root.requires_grad) return;
  root.grad.fill(1.0);

  std::vector<Tensor*> input_grads;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward) continue;
    if (!node.grad.all_finite()) throw NumericError("non-finite gradient reached node " + std::to_string(id));
    input_grads.clear();
    for (std::size_t in : node.inputs) input_grads.push_back(nodes_[in].requires_grad ? &nodes_[in].grad : nullptr);
    node.backward(node.grad, input_grads);
  }
  for (std::size_t id = 0; id <= loss.id; ++id)
    if (nodes_[id].requires_grad && !nodes_[id].grad.all_finite())
      throw NumericError("non-finite gradient at node " + std::to_string(id));
}

const Tensor* Tape::grad(Var v) const {
  const Node& node = nodes_[v.id];
  if (!node.requires_grad || node.grad.empty()) return nullptr;
  return &node.grad;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw NumericError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

template <typename F, typename D>
Var unary(Var a, F f, D df) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return a.tape->record(std::move(out), {a}, [a, df](const Tensor& g, std::span<Tensor* const> grads) {
    const Tensor& x = a.value();
    Tensor& ga = *grads[0];
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * df(x[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const std::size_t n = x.rows(), k = x.cols(), m = y.cols();
  if (y.rows() != k)
    throw NumericError("matmul: inner extents differ " + to_string(x.shape()) + " x " + to_string(y.shape()));
  Tensor out({n, m}, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      if (xv == 0.0) continue;
      const double* yrow = y.data().data() + p * m;
      double* orow = out.data().data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += xv * yrow[j];
    }
  return a.tape->record(std::move(out), {a, b}, [a, b, n, k, m](const Tensor& g, std::span<Tensor* const> grads) {
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    if (Tensor* ga = grads[0]) {  // dA = G B^T
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * y[p * m + j];
          (*ga)[i * k + p] += s;
        }
    }
    if (Tensor* gb = grads[1]) {  // dB = A^T G
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double xv = x[i * k + p];
          if (xv == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) (*gb)[p * m + j] += xv * g[i * m + j];
        }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> grads) {
    for (Tensor* gx : grads)
      if (gx)
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> grads) {
    if (grads[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i];
    if (grads[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](const Tensor& g, std::span<Tensor* const> grads) {
    if (grads[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * b.value()[i];
    if (grads[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] += g[i] * a.value()[i];
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  auto f = [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); };
  return unary(a, f, [f](double x) {
    const double s = f(x);
    return s * (1.0 - s);
  });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); }, [](double) { return 1.0; });
}

Var arccos(Var a) {
  return unary(
      a, [](double x) { return std::acos(std::clamp(x, -1.0 + kArccosMargin, 1.0 - kArccosMargin)); },
      [](double x) {
        const double c = std::clamp(x, -1.0 + kArccosMargin, 1.0 - kArccosMargin);
        return -1.0 / std::sqrt(1.0 - c * c);
      });
}

Var cos(Var a) {
  return unary(a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
}

Var sin(Var a) {
  return unary(a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw NumericError("concat: no operands");
  if (axis != 0 && axis != 1) throw NumericError("concat: axis must be 0 or 1");
  Tape* tape = parts.front().tape;
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    if (axis == 0) {
      if (cols != 0 && t.cols() != cols) throw NumericError("concat: column extents differ");
      cols = t.cols();
      rows += t.rows();
    } else {
      if (rows != 0 && t.rows() != rows) throw NumericError("concat: row extents differ");
      rows = t.rows();
      cols += t.cols();
    }
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    offsets.push_back(offset);
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t c = 0; c < t.cols(); ++c) {
        if (axis == 0)
          out[(offset + r) * cols + c] = t[r * t.cols() + c];
        else
          out[r * cols + offset + c] = t[r * t.cols() + c];
      }
    offset += axis == 0 ? t.rows() : t.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape->record(std::move(out), inputs,
                      [inputs, offsets, axis, cols](const Tensor& g, std::span<Tensor* const> grads) {
                        for (std::size_t k = 0; k < inputs.size(); ++k) {
                          Tensor* gk = grads[k];
                          if (!gk) continue;
                          const std::size_t pr = gk->rows(), pc = gk->cols();
                          for (std::size_t r = 0; r < pr; ++r)
                            for (std::size_t c = 0; c < pc; ++c)
                              (*gk)[r * pc + c] += axis == 0 ? g[(offsets[k] + r) * cols + c] : g[r * cols + offsets[k] + c];
                        }
                      });
}

Var mean(Var a, int axis) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  if (axis != 0 && axis != 1) throw NumericError("mean: axis must be 0 or 1");
  Tensor out(axis == 0 ? Shape{1, cols} : Shape{rows, 1}, 0.0);
  const double inv = 1.0 / static_cast<double>(axis == 0 ? rows : cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[axis == 0 ? c : r] += x[r * cols + c] * inv;
  return a.tape->record(std::move(out), {a}, [rows, cols, axis, inv](const Tensor& g, std::span<Tensor* const> grads) {
    Tensor& ga = *grads[0];
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[axis == 0 ? c : r] * inv;
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->record(Tensor::scalar(s), {a}, [](const Tensor& g, std::span<Tensor* const> grads) {
    for (double& v : grads[0]->values()) v += g[0];
  });
}

Var normalize_columns(Var a) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> norms(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) norms[c] += x[r * cols + c] * x[r * cols + c];
  for (double& n : norms) {
    n = std::sqrt(n);
    if (n == 0.0) throw NumericError("normalize_columns: zero column");
  }
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[r * cols + c] / norms[c];
  Tensor y = out;
  return a.tape->record(std::move(out), {a}, [y, norms, rows, cols](const Tensor& g, std::span<Tensor* const> grads) {
    // d(x/|x|) = (I - y y^T) dx / |x|
    Tensor& ga = *grads[0];
    for (std::size_t c = 0; c < cols; ++c) {
      double dot = 0.0;
      for (std::size_t r = 0; r < rows; ++r) dot += g[r * cols + c] * y[r * cols + c];
      for (std::size_t r = 0; r < rows; ++r) ga[r * cols + c] += (g[r * cols + c] - dot * y[r * cols + c]) / norms[c];
    }
  });
}

Var pick(Var a, std::size_t index) {
  if (index >= a.value().size()) throw NumericError("pick: index out of range");
  return a.tape->record(Tensor::scalar(a.value()[index]), {a}, [index](const Tensor& g, std::span<Tensor* const> grads) {
    (*grads[0])[index] += g[0];
  });
}

Var log_softmax_rows(Var a) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = x[r * cols];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[r * cols + c]);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(x[r * cols + c] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[r * cols + c] - lse;
  }
  Tensor y = out;
  return a.tape->record(std::move(out), {a}, [y, rows, cols](const Tensor& g, std::span<Tensor* const> grads) {
    Tensor& ga = *grads[0];
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gs += g[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r * cols + c] - std::exp(y[r * cols + c]) * gs;
    }
  });
}

}  // namespace grn::ad
