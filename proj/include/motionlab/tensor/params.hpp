#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/tensor/tensor.hpp"

namespace motionlab::tensor {

/// Ordered, named collection of learnable tensors.
template <class T>
class ParamSet {
 public:
  using Entry = std::pair<std::string, Tensor<T>>;

  Tensor<T>& add(std::string name, Tensor<T> t) {
    if (find(name)) throw ConfigError("duplicate parameter '" + name + "'");
    t.set_requires_grad(true);
    items_.emplace_back(std::move(name), std::move(t));
    return items_.back().second;
  }

  const Tensor<T>* find(const std::string& name) const {
    for (const auto& [n, t] : items_)
      if (n == name) return &t;
    return nullptr;
  }
  Tensor<T>* find(const std::string& name) {
    for (auto& [n, t] : items_)
      if (n == name) return &t;
    return nullptr;
  }
  const Tensor<T>& at(const std::string& name) const {
    if (const auto* t = find(name)) return *t;
    throw ConfigError("unknown parameter '" + name + "'");
  }

  std::size_t size() const { return items_.size(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : items_) t.zero_grad();
  }

  bool all_finite() const {
    for (const auto& [_, t] : items_)
      for (T v : t.values())
        if (!std::isfinite(v)) return false;
    return true;
  }

  /// Deep copy of values; the copy has no gradients.
  ParamSet clone() const {
    ParamSet out;
    for (const auto& [n, t] : items_) out.add(n, t.detach());
    return out;
  }

  /// Same names and values cast to another scalar type.
  template <class U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& [n, t] : items_) {
      std::vector<U> v(t.values().begin(), t.values().end());
      out.add(n, Tensor<U>::from(t.shape(), std::move(v)));
    }
    return out;
  }

 private:
  std::vector<Entry> items_;
};

}  // namespace motionlab::tensor
