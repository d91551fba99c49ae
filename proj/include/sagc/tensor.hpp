// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensor with a dynamically built reverse-mode graph.
//
// A Tensor is a cheap shared handle. Values are immutable after creation;
// only the gradient buffer of a node is written, and only by backward().
// Parameters are mutated in place by the optimizer between steps through
// mutable_data(), never while a graph referencing them is alive.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sagc/errors.hpp"

namespace sagc {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class Tensor {
 public:
  using value_type = T;
  struct Node;
  using NodePtr = std::shared_ptr<Node>;
  using BackwardFn = std::function<void(const Node& self)>;

  struct Node {
    Shape shape;
    std::shared_ptr<std::vector<T>> data;
    std::vector<T> grad;  // empty until backward() reaches this node
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<NodePtr> parents;
    BackwardFn backward_fn;

    std::span<const T> values() const { return *data; }
    std::size_t size() const { return data->size(); }
  };

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t ndim() const { return node_->shape.size(); }
  /// Extent of axis `axis`; negative indices count from the back.
  std::size_t dim(int axis) const;
  std::size_t numel() const { return node_->data->size(); }

  std::span<const T> data() const { return *node_->data; }
  /// In-place access for optimizers and initializers. Do not call while a
  /// graph built from this tensor is still in use.
  std::span<T> mutable_data() { return *node_->data; }
  T item() const;
  T at(std::size_t flat_index) const { return (*node_->data)[flat_index]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Accumulated gradient; zeros if backward has not reached this tensor.
  std::vector<T> grad() const;
  void zero_grad() { node_->grad.clear(); }

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls until zero_grad(); interior gradients are recomputed each call.
  void backward() const;

  /// Same storage, no graph history, no gradient.
  Tensor detach() const;
  /// Fresh leaf sharing this tensor's storage but owning its own gradient.
  /// Lets several graphs read one parameter buffer without sharing gradients.
  Tensor alias_leaf(bool requires_grad = true) const;
  /// Deep copy of the values as a new leaf.
  Tensor clone(bool requires_grad = false) const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>(at(i));
    return Tensor<U>(shape(), std::move(out));
  }

  /// Builds an op result. Graph edges are kept only if some parent needs a
  /// gradient; otherwise the result is a constant leaf.
  static Tensor from_op(Shape shape, std::vector<T> data, std::vector<Tensor> parents, BackwardFn fn);

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

/// Gradient buffer of a parent inside a backward function, or nullptr when
/// that parent does not take part in differentiation.
template <typename T>
inline T* grad_target(const typename Tensor<T>::Node& self, std::size_t parent) {
  auto& p = *self.parents[parent];
  return p.requires_grad ? p.grad.data() : nullptr;
}

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tensor<long double>;

}  // namespace sagc
