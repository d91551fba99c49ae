// SPDX-License-Identifier: Apache-2.0
#include "sagc/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace sagc {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad) {
  if (sagc::numel(shape) != data.size()) {
    throw ShapeError("tensor shape " + to_string(shape) + " does not match " + std::to_string(data.size()) +
                     " values");
  }
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor shape " + to_string(shape) + " has a zero extent");
  }
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->data = std::make_shared<std::vector<T>>(std::move(data));
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = sagc::numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(int axis) const {
  const int n = static_cast<int>(ndim());
  const int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(a)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return at(0);
}

template <typename T>
std::vector<T> Tensor<T>::grad() const {
  if (node_->grad.empty()) return std::vector<T>(numel(), T(0));
  return node_->grad;
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + to_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->is_leaf) {
      if (n->grad.empty()) n->grad.assign(n->size(), T(0));
    } else {
      n->grad.assign(n->size(), T(0));
    }
  }
  node_->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->shape = node_->shape;
  t.node_->data = node_->data;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::alias_leaf(bool requires_grad) const {
  Tensor t = detach();
  t.node_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::clone(bool requires_grad) const {
  return Tensor(shape(), *node_->data, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_op(Shape shape, std::vector<T> data, std::vector<Tensor> parents, BackwardFn fn) {
  Tensor out(std::move(shape), std::move(data));
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) { return p.defined() && p.requires_grad(); });
  if (needs) {
    out.node_->requires_grad = true;
    out.node_->is_leaf = false;
    out.node_->parents.reserve(parents.size());
    for (auto& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward_fn = std::move(fn);
  }
  return out;
}

template class Tensor<float>;
template class Tensor<double>;
template class Tensor<long double>;

}  // namespace sagc
