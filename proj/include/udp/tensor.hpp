// Copyright 2026 The udp-adapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "udp/error.hpp"
#include "udp/kernels.hpp"

namespace udp {

using Shape = std::vector<std::size_t>;

// Storage precision. Arithmetic always runs in double; an f32 tensor keeps
// only float-representable values (results are rounded on store).
enum class DType : std::uint8_t { f64 = 0x01, f32 = 0x02 };

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

class Tensor;

namespace detail {

struct TensorImpl;
using ImplPtr = std::shared_ptr<TensorImpl>;
using BackwardFn =
    std::function<void(const TensorImpl& out, std::span<const ImplPtr> inputs)>;

struct Node {
  std::string op;
  std::vector<ImplPtr> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  DType dtype = DType::f64;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, only when requires_grad
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // null for leaves
};

inline thread_local bool grad_enabled = true;

// Lazily allocates and returns the gradient accumulator of a tracked tensor.
inline std::vector<double>& grad_of(TensorImpl& t) {
  if (t.grad.size() != t.data.size()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

inline void round_to_dtype(DType dtype, std::vector<double>& v) {
  if (dtype != DType::f32) return;
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace detail

/// Disables graph recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Dense row-major tensor handle. Copies share storage; use clone() for a
/// deep copy. Tensors produced by ops on tracked inputs carry the graph node
/// that backward() walks.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(detail::ImplPtr impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false,
                      DType dtype = DType::f64) {
    return full(std::move(shape), 0.0, requires_grad, dtype);
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false,
                     DType dtype = DType::f64) {
    const std::size_t n = udp::numel(shape);
    return from_data(std::move(shape), std::vector<double>(n, value),
                     requires_grad, dtype);
  }

  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false, DType dtype = DType::f64) {
    if (udp::numel(shape) != data.size()) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = std::move(shape);
    impl->dtype = dtype;
    impl->data = std::move(data);
    detail::round_to_dtype(dtype, impl->data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return from_data({}, {value}, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t numel() const { return impl_->data.size(); }
  DType dtype() const { return impl_->dtype; }

  std::span<const double> data() const { return impl_->data; }
  // Direct mutation is reserved for leaves (optimizers, initializers).
  std::span<double> mutable_data() {
    if (impl_->node) throw ContractError("mutable_data() on a non-leaf tensor");
    return impl_->data;
  }
  double item() const {
    if (numel() != 1) throw ContractError("item() on a tensor with " +
                                          std::to_string(numel()) + " elements");
    return impl_->data[0];
  }
  double operator[](std::size_t i) const { return impl_->data[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) {
    if (impl_->node) throw ContractError("requires_grad is fixed for op results");
    impl_->requires_grad = on;
    if (!on) impl_->grad.clear();
  }
  bool is_leaf() const { return impl_->node == nullptr; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  const std::string& op_name() const {
    static const std::string kLeaf = "leaf";
    return impl_->node ? impl_->node->op : kLeaf;
  }

  Tensor clone() const {
    return from_data(shape(), impl_->data, false, dtype());
  }
  Tensor detach() const { return clone(); }

  const detail::ImplPtr& impl() const { return impl_; }

 private:
  detail::ImplPtr impl_;
};

namespace detail {

inline void check_finite(std::string_view op, const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError("non-finite value produced by " + std::string(op));
    }
  }
}

// Wraps freshly computed data into an op result, wiring a graph node when any
// input is tracked and recording is enabled.
inline Tensor make_result(std::string_view op, Shape shape,
                          std::vector<double> data,
                          std::initializer_list<const Tensor*> inputs,
                          BackwardFn backward) {
  check_finite(op, data);
  DType dtype = DType::f64;
  bool tracked = false;
  for (const Tensor* t : inputs) {
    if (t == nullptr || !t->defined()) continue;
    if (t->dtype() == DType::f32) dtype = DType::f32;
    tracked = tracked || t->requires_grad();
  }
  Tensor out = Tensor::from_data(std::move(shape), std::move(data), false, dtype);
  if (tracked && grad_enabled) {
    auto node = std::make_shared<Node>();
    node->op = std::string(op);
    for (const Tensor* t : inputs) {
      node->inputs.push_back(t != nullptr && t->defined() ? t->impl() : nullptr);
    }
    node->backward = std::move(backward);
    out.impl()->requires_grad = true;
    out.impl()->node = std::move(node);
  }
  return out;
}

inline bool wants_grad(const ImplPtr& p) { return p && p->requires_grad; }

}  // namespace detail

/// Recorded computation reachable from a root tensor, in topological order
/// (inputs strictly before the nodes that consume them).
class Graph {
 public:
  static Graph build(const Tensor& root) {
    Graph g;
    std::unordered_set<const detail::TensorImpl*> seen;
    // iterative post-order DFS
    std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
    stack.emplace_back(root.impl().get(), 0);
    seen.insert(root.impl().get());
    while (!stack.empty()) {
      auto& [t, next] = stack.back();
      const auto* node = t->node.get();
      if (node != nullptr && next < node->inputs.size()) {
        detail::TensorImpl* child = node->inputs[next++].get();
        if (child != nullptr && child->requires_grad && seen.insert(child).second) {
          stack.emplace_back(child, 0);
        }
        continue;
      }
      g.order_.push_back(t);
      stack.pop_back();
    }
    return g;
  }

  std::span<detail::TensorImpl* const> order() const { return order_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<detail::TensorImpl*> order_;
};

/// Accumulates d(loss)/d(leaf) into every tracked leaf reachable from loss.
/// Intermediate gradients are released as soon as they have been propagated.
inline void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1 || loss.rank() > 1) {
    throw ContractError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward() on a tensor that is not part of a tracked graph");
  }
  const Graph graph = Graph::build(loss);
  detail::grad_of(*loss.impl())[0] += 1.0;
  const auto order = graph.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* t = *it;
    if (!t->node) continue;
    if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
    t->node->backward(*t, t->node->inputs);
    t->grad.clear();
    t->grad.shrink_to_fit();
  }
}

// ---------------------------------------------------------------------------
// Basic differentiable ops
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul shape mismatch " + shape_str(a.shape()) +
                         " @ " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> c(m * n, 0.0);
  kernels::gemm_acc(m, n, k, a.data().data(), b.data().data(), c.data());
  return detail::make_result(
      "matmul", {m, n}, std::move(c), {&a, &b},
      [m, n, k](const detail::TensorImpl& out, std::span<const detail::ImplPtr> in) {
        const double* dc = out.grad.data();
        if (detail::wants_grad(in[0])) {
          auto bt = kernels::transposed(k, n, in[1]->data.data());
          kernels::gemm_acc(m, k, n, dc, bt.data(), detail::grad_of(*in[0]).data());
        }
        if (detail::wants_grad(in[1])) {
          auto at = kernels::transposed(m, k, in[0]->data.data());
          kernels::gemm_acc(k, n, m, at.data(), dc, detail::grad_of(*in[1]).data());
        }
      });
}

namespace detail {

inline bool is_scalar_like(const Tensor& t) { return t.numel() == 1 && t.rank() == 0; }

enum class BinaryKind { add, mul };

inline Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool a_scalar = !same && is_scalar_like(a);
  const bool b_scalar = !same && is_scalar_like(b);
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError("elementwise shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
  const Shape shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = udp::numel(shape);
  auto av = a.data();
  auto bv = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a_scalar ? av[0] : av[i];
    const double y = b_scalar ? bv[0] : bv[i];
    out[i] = kind == BinaryKind::add ? x + y : x * y;
  }
  return make_result(
      kind == BinaryKind::add ? "add" : "mul", shape, std::move(out), {&a, &b},
      [kind, a_scalar, b_scalar, n](const TensorImpl& o, std::span<const ImplPtr> in) {
        for (int side = 0; side < 2; ++side) {
          if (!wants_grad(in[side])) continue;
          const bool scalar_side = side == 0 ? a_scalar : b_scalar;
          const bool other_scalar = side == 0 ? b_scalar : a_scalar;
          const auto& other = in[1 - side]->data;
          auto& g = grad_of(*in[side]);
          for (std::size_t i = 0; i < n; ++i) {
            double d = o.grad[i];
            if (kind == BinaryKind::mul) d *= other_scalar ? other[0] : other[i];
            g[scalar_side ? 0 : i] += d;
          }
        }
      });
}

template <typename Fwd, typename Deriv>
Tensor unary(std::string_view op, const Tensor& x, Fwd fwd, Deriv deriv) {
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return make_result(op, x.shape(), std::move(out), {&x},
                     [deriv](const TensorImpl& o, std::span<const ImplPtr> in) {
                       auto& g = grad_of(*in[0]);
                       const auto& xd = in[0]->data;
                       for (std::size_t i = 0; i < g.size(); ++i)
                         g[i] += o.grad[i] * deriv(xd[i], o.data[i]);
                     });
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary(detail::BinaryKind::add, a, b);
}
inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary(detail::BinaryKind::mul, a, b);
}

inline Tensor scale(const Tensor& x, double c) {
  return detail::unary("scale", x, [c](double v) { return c * v; },
                       [c](double, double) { return c; });
}

inline Tensor relu(const Tensor& x) {
  return detail::unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
                       [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Tensor exp(const Tensor& x) {
  return detail::unary("exp", x, [](double v) { return std::exp(v); },
                       [](double, double y) { return y; });
}

inline Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw DomainError("log of nonpositive value " + std::to_string(v));
  }
  return detail::unary("log", x, [](double v) { return std::log(v); },
                       [](double v, double) { return 1.0 / v; });
}

namespace detail {

inline std::pair<std::size_t, std::size_t> rows_cols(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("last-dim op on a scalar");
  const std::size_t cols = x.shape().back();
  return {cols == 0 ? 0 : x.numel() / cols, cols};
}

}  // namespace detail

inline Tensor softmax_lastdim(const Tensor& x) {
  const auto [rows, cols] = detail::rows_cols(x);
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * cols;
    double* y = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (y[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= z;
  }
  return detail::make_result(
      "softmax", x.shape(), std::move(out), {&x},
      [rows, cols](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        auto& g = detail::grad_of(*in[0]);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = o.data.data() + r * cols;
          const double* dy = o.grad.data() + r * cols;
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) dot += y[c] * dy[c];
          for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (dy[c] - dot);
        }
      });
}

inline Tensor log_softmax_lastdim(const Tensor& x) {
  const auto [rows, cols] = detail::rows_cols(x);
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * cols;
    double* y = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(in[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < cols; ++c) y[c] = in[c] - lse;
  }
  return detail::make_result(
      "log_softmax", x.shape(), std::move(out), {&x},
      [rows, cols](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        auto& g = detail::grad_of(*in[0]);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = o.data.data() + r * cols;
          const double* dy = o.grad.data() + r * cols;
          double total = 0.0;
          for (std::size_t c = 0; c < cols; ++c) total += dy[c];
          for (std::size_t c = 0; c < cols; ++c)
            g[r * cols + c] += dy[c] - std::exp(y[c]) * total;
        }
      });
}

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return detail::make_result("sum", {}, {s}, {&x},
                             [](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
                               auto& g = detail::grad_of(*in[0]);
                               for (double& v : g) v += o.grad[0];
                             });
}

inline Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("cannot reshape " + shape_str(x.shape()) + " to " +
                         shape_str(shape));
  }
  std::vector<double> data(x.data().begin(), x.data().end());
  return detail::make_result("reshape", std::move(shape), std::move(data), {&x},
                             [](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
                               auto& g = detail::grad_of(*in[0]);
                               for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                             });
}

/// y[M,N] = x[M,K] * w[K,N] + b[N]
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0) || b.rank() != 1 ||
      b.dim(0) != w.dim(1)) {
    throw DimensionError("linear shape mismatch x" + shape_str(x.shape()) + " w" +
                         shape_str(w.shape()) + " b" + shape_str(b.shape()));
  }
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    std::copy(b.data().begin(), b.data().end(), y.begin() + static_cast<std::ptrdiff_t>(i * n));
  kernels::gemm_acc(m, n, k, x.data().data(), w.data().data(), y.data());
  return detail::make_result(
      "linear", {m, n}, std::move(y), {&x, &w, &b},
      [m, n, k](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        const double* dy = o.grad.data();
        if (detail::wants_grad(in[0])) {
          auto wt = kernels::transposed(k, n, in[1]->data.data());
          kernels::gemm_acc(m, k, n, dy, wt.data(), detail::grad_of(*in[0]).data());
        }
        if (detail::wants_grad(in[1])) {
          auto xt = kernels::transposed(m, k, in[0]->data.data());
          kernels::gemm_acc(k, n, m, xt.data(), dy, detail::grad_of(*in[1]).data());
        }
        if (detail::wants_grad(in[2])) {
          auto& gb = detail::grad_of(*in[2]);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += dy[i * n + j];
        }
      });
}

/// y[M,N] = x[M,N] + v[N] (row-vector broadcast, the one broadcast we allow)
inline Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  if (x.rank() != 2 || v.rank() != 1 || v.dim(0) != x.dim(1)) {
    throw DimensionError("add_rowvec shape mismatch " + shape_str(x.shape()) +
                         " + " + shape_str(v.shape()));
  }
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> y(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] += v[j];
  return detail::make_result(
      "add_rowvec", {m, n}, std::move(y), {&x, &v},
      [m, n](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        if (detail::wants_grad(in[0])) {
          auto& g = detail::grad_of(*in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
        }
        if (detail::wants_grad(in[1])) {
          auto& g = detail::grad_of(*in[1]);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g[j] += o.grad[i * n + j];
        }
      });
}

/// Mean over axis 1 of a [B,T,D] tensor -> [B,D].
inline Tensor mean_time(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) == 0) throw DimensionError("mean_time expects [B,T,D], T>0");
  const std::size_t bsz = x.dim(0), t = x.dim(1), d = x.dim(2);
  std::vector<double> y(bsz * d, 0.0);
  const double inv = 1.0 / static_cast<double>(t);
  for (std::size_t b = 0; b < bsz; ++b)
    for (std::size_t s = 0; s < t; ++s)
      for (std::size_t j = 0; j < d; ++j) y[b * d + j] += x[(b * t + s) * d + j];
  for (double& v : y) v *= inv;
  return detail::make_result(
      "mean_time", {bsz, d}, std::move(y), {&x},
      [bsz, t, d, inv](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        auto& g = detail::grad_of(*in[0]);
        for (std::size_t b = 0; b < bsz; ++b)
          for (std::size_t s = 0; s < t; ++s)
            for (std::size_t j = 0; j < d; ++j) g[(b * t + s) * d + j] += o.grad[b * d + j] * inv;
      });
}

/// Identity on the forward pass; multiplies the incoming gradient by -weight.
inline Tensor grad_reverse(const Tensor& x, double weight) {
  std::vector<double> y(x.data().begin(), x.data().end());
  return detail::make_result(
      "grad_reverse", x.shape(), std::move(y), {&x},
      [weight](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        auto& g = detail::grad_of(*in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += -weight * o.grad[i];
      });
}

}  // namespace udp
