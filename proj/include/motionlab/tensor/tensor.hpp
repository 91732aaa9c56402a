#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/tensor/shape.hpp"

namespace motionlab::tensor {

template <class T>
struct Node {
  Shape5 shape;
  std::vector<T> value;
  /// Empty until a gradient reaches this node.
  std::vector<T> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  bool consumed = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  /// Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

/// Handle to a node of the autodiff graph. Copies share the node.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor from(Shape5 shape, std::vector<T> values,
                     bool requires_grad = false) {
    if (static_cast<std::int64_t>(values.size()) != shape.numel())
      throw ShapeError("tensor value count " + std::to_string(values.size()) +
                       " does not match shape " + shape.str());
    auto n = std::make_shared<Node<T>>();
    n->shape = shape;
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor full(Shape5 shape, T v, bool requires_grad = false) {
    for (auto d : shape.dims)
      if (d < 0) throw ShapeError("negative dimension in " + shape.str());
    return from(shape, std::vector<T>(shape.numel(), v), requires_grad);
  }

  static Tensor zeros(Shape5 shape, bool requires_grad = false) {
    return full(shape, T(0), requires_grad);
  }

  static Tensor scalar(T v, bool requires_grad = false) {
    return from(kScalarShape, {v}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape5& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  /// Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<T> mutable_values() { return node_->value; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool is_leaf() const { return node_->is_leaf; }

  T item() const {
    if (numel() != 1)
      throw ShapeError("item() on tensor of shape " + shape().str());
    return node_->value[0];
  }

  /// Value copy with no graph link.
  Tensor detach() const { return from(shape(), node_->value, false); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Builds the result of an operation. The backward closure is recorded only
/// if some input requires gradients, so inference builds no graph.
template <class T, class Backward>
Tensor<T> make_result(Shape5 shape, std::vector<T> values,
                      std::initializer_list<Tensor<T>> inputs, const char* op,
                      Backward&& backward) {
  auto n = std::make_shared<Node<T>>();
  n->shape = shape;
  n->value = std::move(values);
  n->op = op;
  n->is_leaf = false;
  for (const auto& in : inputs)
    if (in.defined() && in.requires_grad()) n->requires_grad = true;
  if (n->requires_grad) {
    for (const auto& in : inputs)
      n->parents.push_back(in.defined() ? in.node_ptr() : nullptr);
    n->backward = std::forward<Backward>(backward);
  }
  return Tensor<T>(std::move(n));
}

/// Same as make_result for a runtime-sized list of inputs.
template <class T, class Backward>
Tensor<T> make_result(Shape5 shape, std::vector<T> values,
                      const std::vector<Tensor<T>>& inputs, const char* op,
                      Backward&& backward) {
  auto n = std::make_shared<Node<T>>();
  n->shape = shape;
  n->value = std::move(values);
  n->op = op;
  n->is_leaf = false;
  for (const auto& in : inputs)
    if (in.requires_grad()) n->requires_grad = true;
  if (n->requires_grad) {
    for (const auto& in : inputs) n->parents.push_back(in.node_ptr());
    n->backward = std::forward<Backward>(backward);
  }
  return Tensor<T>(std::move(n));
}

/// True when parent i exists and wants a gradient.
template <class T>
bool wants_grad(const Node<T>& self, std::size_t i) {
  return i < self.parents.size() && self.parents[i] &&
         self.parents[i]->requires_grad;
}

/// Reverse-mode sweep from a single-element loss. Gradients accumulate into
/// leaves; the graph is released afterwards, so a second call on the same
/// loss throws StateError.
template <class T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ShapeError("backward needs a single-element loss");
  Node<T>* root = loss.node();
  if (root->consumed)
    throw StateError("backward already ran on this graph; run forward again");
  if (!root->requires_grad)
    throw StateError("loss does not depend on any tensor requiring grad");

  // Iterative post-order DFS gives a deterministic topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  root->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  for (Node<T>* n : order) {
    if (n->is_leaf) continue;
    n->consumed = true;
    n->backward = nullptr;
    n->parents.clear();
  }
}

}  // namespace motionlab::tensor
