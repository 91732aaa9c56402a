#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/tensor/tensor.hpp"

namespace motionlab::tensor {

namespace detail {

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() +
                     " vs " + b.shape().str());
}

/// Shared implementation of elementwise unary ops given f(x) and f'(x, y).
template <class T, class F, class DF>
Tensor<T> unary(const Tensor<T>& x, const char* op, F f, DF df) {
  std::vector<T> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return make_result<T>(x.shape(), std::move(out), {x}, op,
                        [df](Node<T>& self) {
                          auto& px = *self.parents[0];
                          auto& g = px.ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i)
                            g[i] += self.grad[i] * df(px.value[i], self.value[i]);
                        });
}

}  // namespace detail

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] + b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "add",
                        [](Node<T>& self) {
                          for (std::size_t k = 0; k < 2; ++k) {
                            if (!wants_grad(self, k)) continue;
                            auto& g = self.parents[k]->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i];
                          }
                        });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] - b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "sub",
                        [](Node<T>& self) {
                          for (std::size_t k = 0; k < 2; ++k) {
                            if (!wants_grad(self, k)) continue;
                            const T sign = k == 0 ? T(1) : T(-1);
                            auto& g = self.parents[k]->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += sign * self.grad[i];
                          }
                        });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] * b.values()[i];
  return make_result<T>(
      a.shape(), std::move(out), {a, b}, "mul", [](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (wants_grad(self, 0)) {
          auto& g = pa.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] * pb.value[i];
        }
        if (wants_grad(self, 1)) {
          auto& g = pb.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] * pa.value[i];
        }
      });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return detail::unary(
      x, "scale", [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.2)) {
  return detail::unary(
      x, "leaky_relu", [slope](T v) { return v > 0 ? v : slope * v; },
      [slope](T v, T) { return v > 0 ? T(1) : slope; });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  return detail::unary(
      x, "tanh", [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return detail::unary(
      x, "sigmoid", [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

/// Clamps into [lo, hi]; gradient passes only where the input was inside.
template <class T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  return detail::unary(
      x, "clamp", [lo, hi](T v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](T v, T) { return (v >= lo && v <= hi) ? T(1) : T(0); });
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.values()) acc += v;
  return make_result<T>(kScalarShape, {acc}, {x}, "sum", [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

/// Mean of squared differences over all elements.
template <class T>
Tensor<T> mse(const Tensor<T>& pred, const Tensor<T>& target) {
  detail::require_same_shape(pred, target, "mse");
  const std::size_t n = pred.numel();
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = pred.values()[i] - target.values()[i];
    acc += d * d;
  }
  return make_result<T>(
      kScalarShape, {acc / static_cast<T>(n)}, {pred, target}, "mse",
      [n](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const T k = T(2) * self.grad[0] / static_cast<T>(n);
        if (wants_grad(self, 0)) {
          auto& g = pa.ensure_grad();
          for (std::size_t i = 0; i < n; ++i)
            g[i] += k * (pa.value[i] - pb.value[i]);
        }
        if (wants_grad(self, 1)) {
          auto& g = pb.ensure_grad();
          for (std::size_t i = 0; i < n; ++i)
            g[i] -= k * (pa.value[i] - pb.value[i]);
        }
      });
}

/// Concatenates along the channel axis. All other dims must agree.
template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels of nothing");
  const Shape5 s0 = xs.front().shape();
  std::int64_t channels = 0;
  for (const auto& x : xs) {
    const Shape5 s = x.shape();
    if (s.n() != s0.n() || s.t() != s0.t() || s.h() != s0.h() ||
        s.w() != s0.w())
      throw ShapeError("concat_channels: " + s.str() + " vs " + s0.str());
    channels += s.c();
  }
  const Shape5 out_shape{s0.n(), channels, s0.t(), s0.h(), s0.w()};
  const std::int64_t vol = s0.volume();
  std::vector<T> out(out_shape.numel());
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto& x : xs) {
    offsets.push_back(off);
    const std::int64_t block = x.shape().c() * vol;
    for (std::int64_t n = 0; n < s0.n(); ++n)
      std::copy_n(x.values().begin() + n * block, block,
                  out.begin() + n * channels * vol + off * vol);
    off += x.shape().c();
  }
  return make_result<T>(
      out_shape, std::move(out), xs, "concat_channels",
      [offsets, channels, vol, batch = s0.n()](Node<T>& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
          if (!wants_grad(self, k)) continue;
          auto& p = *self.parents[k];
          auto& g = p.ensure_grad();
          const std::int64_t block = p.shape.c() * vol;
          for (std::int64_t n = 0; n < batch; ++n) {
            const T* src =
                self.grad.data() + n * channels * vol + offsets[k] * vol;
            T* dst = g.data() + n * block;
            for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
          }
        }
      });
}

/// Tiles a single-frame tensor (t = 1) along time.
template <class T>
Tensor<T> repeat_time(const Tensor<T>& x, std::int64_t frames) {
  const Shape5 s = x.shape();
  if (s.t() != 1) throw ShapeError("repeat_time needs t=1, got " + s.str());
  const Shape5 out_shape{s.n(), s.c(), frames, s.h(), s.w()};
  const std::int64_t plane = s.h() * s.w();
  std::vector<T> out(out_shape.numel());
  for (std::int64_t nc = 0; nc < s.n() * s.c(); ++nc)
    for (std::int64_t t = 0; t < frames; ++t)
      std::copy_n(x.values().begin() + nc * plane, plane,
                  out.begin() + (nc * frames + t) * plane);
  return make_result<T>(out_shape, std::move(out), {x}, "repeat_time",
                        [plane, frames, nc_count = s.n() * s.c()](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::int64_t nc = 0; nc < nc_count; ++nc)
                            for (std::int64_t t = 0; t < frames; ++t) {
                              const T* src =
                                  self.grad.data() + (nc * frames + t) * plane;
                              for (std::int64_t i = 0; i < plane; ++i)
                                g[nc * plane + i] += src[i];
                            }
                        });
}

/// Frames [begin, begin + count) along the time axis.
template <class T>
Tensor<T> slice_time(const Tensor<T>& x, std::int64_t begin,
                     std::int64_t count) {
  const Shape5 s = x.shape();
  if (begin < 0 || count < 1 || begin + count > s.t())
    throw ShapeError("slice_time [" + std::to_string(begin) + ", +" +
                     std::to_string(count) + ") out of " + s.str());
  const Shape5 out_shape{s.n(), s.c(), count, s.h(), s.w()};
  const std::int64_t plane = s.h() * s.w();
  std::vector<T> out(out_shape.numel());
  for (std::int64_t nc = 0; nc < s.n() * s.c(); ++nc)
    std::copy_n(x.values().begin() + (nc * s.t() + begin) * plane,
                count * plane, out.begin() + nc * count * plane);
  return make_result<T>(
      out_shape, std::move(out), {x}, "slice_time",
      [plane, begin, count, t = s.t(), nc_count = s.n() * s.c()](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::int64_t nc = 0; nc < nc_count; ++nc)
          for (std::int64_t i = 0; i < count * plane; ++i)
            g[(nc * t + begin) * plane + i] += self.grad[nc * count * plane + i];
      });
}

namespace detail {

/// Index map of the 3D pixel shuffle: out_index[i] is where input element i
/// lands. Input channel c*r^3 + (a*r + b)*r + d feeds output channel c at
/// offset (a, b, d) inside each r x r x r cell.
inline std::vector<std::int64_t> shuffle_map(const Shape5& in, int r) {
  const std::int64_t oc = in.c() / (r * r * r);
  const std::int64_t T = in.t(), H = in.h(), W = in.w();
  const std::int64_t OT = T * r, OH = H * r, OW = W * r;
  std::vector<std::int64_t> map(in.numel());
  std::int64_t i = 0;
  for (std::int64_t n = 0; n < in.n(); ++n)
    for (std::int64_t ic = 0; ic < in.c(); ++ic) {
      const std::int64_t c = ic / (r * r * r);
      const std::int64_t cell = ic % (r * r * r);
      const std::int64_t a = cell / (r * r), b = (cell / r) % r, d = cell % r;
      for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t h = 0; h < H; ++h)
          for (std::int64_t w = 0; w < W; ++w)
            map[i++] = (((n * oc + c) * OT + t * r + a) * OH + h * r + b) * OW +
                       w * r + d;
    }
  return map;
}

}  // namespace detail

/// (n, c, t, h, w) -> (n, c / r^3, r t, r h, r w). A pure permutation.
template <class T>
Tensor<T> pixel_shuffle3d(const Tensor<T>& x, int r) {
  const Shape5 s = x.shape();
  if (r < 1 || s.c() % (static_cast<std::int64_t>(r) * r * r) != 0)
    throw ShapeError("pixel_shuffle3d: channels " + std::to_string(s.c()) +
                     " not divisible by r^3 = " + std::to_string(r * r * r));
  const Shape5 out_shape{s.n(), s.c() / (r * r * r), s.t() * r, s.h() * r,
                         s.w() * r};
  auto map = detail::shuffle_map(s, r);
  std::vector<T> out(out_shape.numel());
  for (std::size_t i = 0; i < map.size(); ++i) out[map[i]] = x.values()[i];
  return make_result<T>(out_shape, std::move(out), {x}, "pixel_shuffle3d",
                        [map = std::move(map)](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < map.size(); ++i)
                            g[i] += self.grad[map[i]];
                        });
}

/// Inverse of pixel_shuffle3d.
template <class T>
Tensor<T> pixel_unshuffle3d(const Tensor<T>& x, int r) {
  const Shape5 s = x.shape();
  if (r < 1 || s.t() % r || s.h() % r || s.w() % r)
    throw ShapeError("pixel_unshuffle3d: " + s.str() +
                     " not divisible by r = " + std::to_string(r));
  const Shape5 in_shape{s.n(), s.c() * r * r * r, s.t() / r, s.h() / r,
                        s.w() / r};
  auto map = detail::shuffle_map(in_shape, r);
  std::vector<T> out(in_shape.numel());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = x.values()[map[i]];
  return make_result<T>(in_shape, std::move(out), {x}, "pixel_unshuffle3d",
                        [map = std::move(map)](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < map.size(); ++i)
                            g[map[i]] += self.grad[i];
                        });
}

/// Train: +1 with probability (1 + x) / 2, else -1. Eval: sign with
/// sign(0) = +1. Relaxed: identity (the straight-through surrogate itself,
/// used for finite-difference checks).
enum class BinarizeMode { Train, Eval, Relaxed };

/// Binarizes values in [-1, 1]; the backward pass is the identity.
template <class T>
Tensor<T> stochastic_binarize(const Tensor<T>& x, BinarizeMode mode,
                              std::uint64_t seed) {
  std::vector<T> out(x.numel());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.values()[i];
    if (!(v >= T(-1) && v <= T(1)))
      throw DomainError("stochastic_binarize input " + std::to_string(v) +
                        " outside [-1, 1]");
    switch (mode) {
      case BinarizeMode::Train: {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        out[i] = u < (1.0 + static_cast<double>(v)) / 2.0 ? T(1) : T(-1);
        break;
      }
      case BinarizeMode::Eval:
        out[i] = v >= T(0) ? T(1) : T(-1);
        break;
      case BinarizeMode::Relaxed:
        out[i] = v;
        break;
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x}, "stochastic_binarize",
                        [](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i)
                            g[i] += self.grad[i];
                        });
}

}  // namespace motionlab::tensor
