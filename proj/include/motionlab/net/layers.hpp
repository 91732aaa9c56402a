#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "motionlab/tensor/conv3d.hpp"
#include "motionlab/tensor/ops.hpp"
#include "motionlab/tensor/params.hpp"

namespace motionlab::net {

using tensor::Conv3dOptions;
using tensor::ParamSet;
using tensor::Shape5;
using tensor::Tensor;

/// Uniform double in [0, 1) from the top 53 bits; identical on every
/// standard library, unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Registers name.w (out, in, kt, kh, kw) with He-uniform init for leaky
/// ReLU and a zero name.b.
template <class T>
void add_conv(ParamSet<T>& ps, const std::string& name, int in, int out,
              std::array<int, 3> k, std::mt19937_64& rng, double gain = 1.0) {
  const Shape5 ws{out, in, k[0], k[1], k[2]};
  const double fan_in = static_cast<double>(in) * k[0] * k[1] * k[2];
  const double bound = gain * std::sqrt(6.0 / ((1.0 + 0.04) * fan_in));
  std::vector<T> w(ws.numel());
  for (auto& v : w) v = static_cast<T>((2.0 * unit_uniform(rng) - 1.0) * bound);
  ps.add(name + ".w", Tensor<T>::from(ws, std::move(w)));
  ps.add(name + ".b", Tensor<T>::zeros({1, out, 1, 1, 1}));
}

template <class T>
Tensor<T> conv(const ParamSet<T>& ps, const std::string& name,
               const Tensor<T>& x, const Conv3dOptions& opt = {}) {
  return tensor::conv3d(x, ps.at(name + ".w"), ps.at(name + ".b"), opt);
}

inline Conv3dOptions same3() {
  Conv3dOptions o;
  o.padding = {1, 1, 1};
  return o;
}

inline Conv3dOptions down3() {
  Conv3dOptions o;
  o.stride = {2, 2, 2};
  o.padding = {1, 1, 1};
  return o;
}

inline Conv3dOptions dilated(int d) {
  Conv3dOptions o;
  o.dilation = {1, d, d};
  o.padding = {1, d, d};
  return o;
}

}  // namespace motionlab::net
