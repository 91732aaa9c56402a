#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/tensor/params.hpp"

namespace motionlab::tensor {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to parameters by
/// position in the ParamSet.
template <class T>
class Adam {
 public:
  explicit Adam(AdamOptions opt = {}) : opt_(opt) {}

  void set_lr(double lr) { opt_.lr = lr; }
  double lr() const { return opt_.lr; }
  std::int64_t step_count() const { return step_; }
  const AdamOptions& options() const { return opt_; }

  /// One update. Every parameter must carry a gradient.
  void step(ParamSet<T>& params) {
    for (const auto& [name, t] : params)
      if (!t.has_grad())
        throw StateError("adam_step: parameter '" + name + "' has no gradient");
    if (m_.empty()) {
      for (const auto& [_, t] : params) {
        m_.emplace_back(t.numel(), 0.0);
        v_.emplace_back(t.numel(), 0.0);
      }
    }
    if (m_.size() != params.size())
      throw StateError("adam_step: parameter set changed size");
    ++step_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(step_));
    std::size_t k = 0;
    for (auto& [name, t] : params) {
      auto& m = m_[k];
      auto& v = v_[k];
      if (m.size() != t.numel())
        throw StateError("adam_step: shape of '" + name + "' changed");
      auto value = t.mutable_values();
      auto grad = t.grad();
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double g = grad[i];
        m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
        v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
        const double mhat = m[i] / bc1, vhat = v[i] / bc2;
        value[i] -= static_cast<T>(opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps));
      }
      ++k;
    }
  }

 private:
  AdamOptions opt_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Learning rate halved (by `factor`) at each decay epoch already reached.
inline double step_decay_lr(double base, int epoch,
                            std::span<const int> decay_epochs,
                            double factor = 0.5) {
  double lr = base;
  for (int d : decay_epochs)
    if (epoch >= d) lr *= factor;
  return lr;
}

/// Rescales decay epochs defined for a reference schedule length onto
/// `epochs`, e.g. {30, 100, 140} of 150 onto 60 gives {12, 40, 56}.
inline std::vector<int> scale_decay_epochs(std::span<const int> reference,
                                           int reference_epochs, int epochs) {
  std::vector<int> out;
  for (int d : reference)
    out.push_back(static_cast<int>(
        std::lround(static_cast<double>(d) * epochs / reference_epochs)));
  return out;
}

}  // namespace motionlab::tensor
