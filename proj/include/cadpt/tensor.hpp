// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with reverse-mode automatic differentiation.
//
// A BasicTensor is a shared handle onto a TensorImpl. Every differentiable
// primitive that consumes a tensor with requires_grad set records a TapeNode
// on its result; backward() linearizes the reachable nodes into a Tape
// (inputs always precede consumers) and replays the backward rules in
// reverse. The graph is rebuilt on every forward pass.
#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

namespace cadpt {

/// Accumulator for reductions: at least double, wider when T is.
template <class T>
using Accum = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

using Shape = std::vector<std::size_t>;

/// Raised when operand shapes do not compose.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a caller violates an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a computation would divide by zero or produce non-finite data.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

namespace detail {
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T>
struct TensorImpl;

template <class T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

template <class T>
struct TapeNode {
  using Rule = std::function<void(TensorImpl<T>& out, std::span<const ImplPtr<T>> inputs)>;
  const char* op = "";
  std::vector<ImplPtr<T>> inputs;
  Rule backward;
};

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty when absent
  bool requires_grad = false;
  std::shared_ptr<TapeNode<T>> node;  // null for leaves

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T{0});
  }
};

template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  BasicTensor(Shape shape, std::vector<T> data, bool requires_grad = false)
      : impl_(std::make_shared<TensorImpl<T>>()) {
    for (auto d : shape) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    }
    if (shape_numel(shape) != data.size()) {
      throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                       shape_str(shape));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
  }

  static BasicTensor zeros(Shape shape, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return BasicTensor(std::move(shape), std::vector<T>(n, T{0}), requires_grad);
  }

  static BasicTensor full(Shape shape, T value, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return BasicTensor(std::move(shape), std::vector<T>(n, value), requires_grad);
  }

  static BasicTensor matrix(std::size_t rows, std::size_t cols, std::vector<T> data,
                            bool requires_grad = false) {
    return BasicTensor({rows, cols}, std::move(data), requires_grad);
  }

  static BasicTensor identity(std::size_t n, bool requires_grad = false) {
    auto t = zeros({n, n}, requires_grad);
    for (std::size_t i = 0; i < n; ++i) t.impl_->data[i * n + i] = T{1};
    return t;
  }

  static BasicTensor scalar(T v, bool requires_grad = false) {
    return BasicTensor({1, 1}, {v}, requires_grad);
  }

  explicit BasicTensor(ImplPtr<T> impl) : impl_(std::move(impl)) {}

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  std::size_t rows() const { return impl_->shape.size() == 2 ? impl_->shape[0] : 1; }
  std::size_t cols() const { return impl_->shape.back(); }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  const std::vector<T>& values() const { return impl_->data; }

  T& at(std::size_t r, std::size_t c) { return impl_->data[r * cols() + c]; }
  T at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

  T item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (!on) impl_->grad.clear();
  }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T{0});
  }
  bool is_leaf() const { return !impl_->node; }

  /// Deep copy that shares nothing with this tensor and carries no graph.
  BasicTensor clone() const {
    BasicTensor out(impl_->shape, impl_->data, impl_->requires_grad);
    return out;
  }

  template <class U>
  BasicTensor<U> cast() const {
    std::vector<U> d(impl_->data.begin(), impl_->data.end());
    return BasicTensor<U>(impl_->shape, std::move(d), impl_->requires_grad);
  }

  const ImplPtr<T>& impl() const { return impl_; }
  bool same_storage(const BasicTensor& o) const { return impl_ == o.impl_; }

 private:
  ImplPtr<T> impl_;
};

using Tensor = BasicTensor<float>;

/// Builds an op result, recording a tape node when any input needs a gradient.
template <class T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data,
                           std::initializer_list<BasicTensor<T>> inputs, const char* op,
                           typename TapeNode<T>::Rule rule) {
  BasicTensor<T> out(std::move(shape), std::move(data));
  if (!grad_enabled()) return out;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return out;
  auto node = std::make_shared<TapeNode<T>>();
  node->op = op;
  node->inputs.reserve(inputs.size());
  for (const auto& in : inputs) node->inputs.push_back(in.impl());
  node->backward = std::move(rule);
  out.impl()->requires_grad = true;
  out.impl()->node = std::move(node);
  return out;
}

/// Variadic-input form of make_result used by concatenations.
template <class T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data, const std::vector<BasicTensor<T>>& inputs,
                           const char* op, typename TapeNode<T>::Rule rule) {
  BasicTensor<T> out(std::move(shape), std::move(data));
  if (!grad_enabled()) return out;
  bool needs = std::any_of(inputs.begin(), inputs.end(), [](const auto& t) { return t.requires_grad(); });
  if (!needs) return out;
  auto node = std::make_shared<TapeNode<T>>();
  node->op = op;
  for (const auto& in : inputs) node->inputs.push_back(in.impl());
  node->backward = std::move(rule);
  out.impl()->requires_grad = true;
  out.impl()->node = std::move(node);
  return out;
}

/// Topologically ordered record of the operations that produced a tensor.
template <class T>
class Tape {
 public:
  /// Linearizes every recorded node reachable from root; inputs precede consumers.
  static Tape record(const BasicTensor<T>& root) {
    Tape tape;
    std::unordered_set<const TensorImpl<T>*> visited;
    // Iterative post-order DFS; deep transformer graphs overflow a recursive walk.
    struct Frame {
      TensorImpl<T>* impl;
      std::size_t next;
    };
    std::vector<Frame> stack;
    auto push = [&](TensorImpl<T>* t) {
      if (!t->node || !visited.insert(t).second) return;
      stack.push_back({t, 0});
    };
    push(root.impl().get());
    while (!stack.empty()) {
      auto& top = stack.back();
      auto& inputs = top.impl->node->inputs;
      if (top.next < inputs.size()) {
        auto* child = inputs[top.next++].get();
        push(child);
      } else {
        tape.order_.push_back(top.impl);
        stack.pop_back();
      }
    }
    return tape;
  }

  std::size_t size() const { return order_.size(); }
  std::span<TensorImpl<T>* const> nodes() const { return order_; }

  /// Index of an impl in the tape, or size() when absent.
  std::size_t position(const TensorImpl<T>* impl) const {
    auto it = std::find(order_.begin(), order_.end(), impl);
    return static_cast<std::size_t>(it - order_.begin());
  }

 private:
  std::vector<TensorImpl<T>*> order_;
};

/// Accumulates dLoss/dTensor into every reachable tensor that requires a gradient.
///
/// Intermediate gradients are reset first, so calling this twice on the same
/// graph adds the same contribution to the leaves twice.
template <class T>
void backward(const BasicTensor<T>& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  auto tape = Tape<T>::record(loss);
  for (auto* impl : tape.nodes()) impl->grad.assign(impl->data.size(), T{0});
  loss.impl()->ensure_grad();
  loss.impl()->grad[0] += T{1};
  auto nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    auto* impl = *it;
    impl->node->backward(*impl, impl->node->inputs);
  }
}

}  // namespace cadpt
