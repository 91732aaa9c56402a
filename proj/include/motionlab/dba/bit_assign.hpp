#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "motionlab/bitstream/bits.hpp"
#include "motionlab/error.hpp"
#include "motionlab/net/layers.hpp"
#include "motionlab/tensor/ops.hpp"

namespace motionlab::dba {

using tensor::Tensor;

inline constexpr double kImportanceFloor = 1e-6;

/// C_bnd channels split into L groups of C_bnd / L.
inline void validate_levels(int c_bnd, int levels) {
  if (c_bnd < 1 || levels < 1 || levels > c_bnd || c_bnd % levels != 0)
    throw ConfigError("C_bnd " + std::to_string(c_bnd) + " must be a multiple of L " +
                      std::to_string(levels) + " with L <= C_bnd");
}

template <class T>
void add_importance_params(tensor::ParamSet<T>& ps, int in_channels, int width,
                           std::mt19937_64& rng) {
  net::add_conv(ps, "importance.c0", in_channels, width, {3, 3, 3}, rng);
  net::add_conv(ps, "importance.c1", width, width, {3, 3, 3}, rng);
  net::add_conv(ps, "importance.out", width, 1, {1, 1, 1}, rng);
}

/// Importance map in (0, 1), one channel at the code resolution.
template <class T>
Tensor<T> importance_forward(const Tensor<T>& features, const tensor::ParamSet<T>& ps) {
  using namespace tensor;
  auto h = leaky_relu(net::conv(ps, "importance.c0", features, net::same3()));
  h = leaky_relu(net::conv(ps, "importance.c1", h, net::same3()));
  auto b = sigmoid(net::conv(ps, "importance.out", h));
  return clamp(b, static_cast<T>(kImportanceFloor), static_cast<T>(1.0 - kImportanceFloor));
}

/// floor(L * b), kept inside {0, ..., L-1}.
inline int quantize_level(double b, int levels) {
  return std::clamp(static_cast<int>(std::floor(levels * b)), 0, levels - 1);
}

template <class T>
std::vector<int> quantize_importance(std::span<const T> map, int levels) {
  std::vector<int> q(map.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = quantize_level(map[i], levels);
  return q;
}

/// Straight-through mask derivative for 1-based channel c.
inline double mask_derivative(int c, double b, int c_bnd, int levels) {
  const int group = (c * levels + c_bnd - 1) / c_bnd;  // ceil(c L / C_bnd)
  const double lb = levels * b;
  return (lb - 1.0 <= group && group <= lb + 2.0) ? static_cast<double>(levels) : 0.0;
}

/// Channel mask from an importance map (N, 1, t, h, w) to (N, C_bnd, t, h, w):
/// channel c (1-based) is kept when c <= (C_bnd / L) * Q(b). The backward
/// pass uses mask_derivative, summed over channels.
template <class T>
Tensor<T> build_mask(const Tensor<T>& map, int c_bnd, int levels) {
  validate_levels(c_bnd, levels);
  const auto s = map.shape();
  if (s.c() != 1) throw ShapeError("build_mask: importance map must have one channel, got " + s.str());
  const std::int64_t sites = s.volume();
  const int group = c_bnd / levels;
  std::vector<T> m(static_cast<std::size_t>(s.n() * c_bnd * sites));
  for (std::int64_t n = 0; n < s.n(); ++n)
    for (std::int64_t i = 0; i < sites; ++i) {
      const int keep = group * quantize_level(map.values()[n * sites + i], levels);
      for (int c = 0; c < keep; ++c) m[(n * c_bnd + c) * sites + i] = T(1);
    }
  return tensor::make_result<T>(
      {s.n(), c_bnd, s.t(), s.h(), s.w()}, std::move(m), {map}, "build_mask",
      [c_bnd, levels, sites, N = s.n()](tensor::Node<T>& self) {
        auto& pb = *self.parents[0];
        auto& g = pb.ensure_grad();
        for (std::int64_t n = 0; n < N; ++n)
          for (std::int64_t i = 0; i < sites; ++i) {
            const double b = pb.value[n * sites + i];
            double acc = 0;
            for (int c = 1; c <= c_bnd; ++c)
              acc += self.grad[(n * c_bnd + c - 1) * sites + i] * mask_derivative(c, b, c_bnd, levels);
            g[n * sites + i] += static_cast<T>(acc);
          }
      });
}

/// Sum of the importance map.
template <class T>
Tensor<T> rate_loss(const Tensor<T>& map) {
  return tensor::sum(map);
}

/// Geometry of one clip's code: C_bnd channels over (t, h, w) sites.
struct CodeDims {
  int c_bnd = 0;
  int t = 0;
  int h = 0;
  int w = 0;
  std::size_t sites() const { return static_cast<std::size_t>(t) * h * w; }
  std::size_t size() const { return sites() * c_bnd; }
};

/// Width of one quantized level in the prefix.
inline int prefix_width(int levels) { return bitstream::ceil_log2(static_cast<std::uint64_t>(levels)); }

/// Exact transmitted bits: sum over sites of prefix width + kept channels.
/// levels == 0 means no bit assignment: every channel of every site.
inline std::size_t transmitted_bits(std::span<const int> q, const CodeDims& d, int levels) {
  if (levels == 0) return d.size();
  std::size_t bits = 0;
  for (int v : q) bits += prefix_width(levels) + static_cast<std::size_t>(d.c_bnd / levels) * v;
  return bits;
}

/// Serializes one clip's code (layout C, t, h, w). With levels > 0 the
/// quantized map is sent first (prefix_width bits each, big-endian), then
/// for each site in raster order its first (C_bnd / L) * Q channels with
/// -1 -> 0 and +1 -> 1. With levels == 0 all channels are sent, no prefix.
template <class T>
bitstream::Bits pack_code(std::span<const T> code, std::span<const int> q, const CodeDims& d,
                          int levels) {
  if (code.size() != d.size())
    throw ShapeError("pack_code: code has " + std::to_string(code.size()) + " values, dims need " +
                     std::to_string(d.size()));
  bitstream::BitWriter w;
  const std::size_t sites = d.sites();
  int group = d.c_bnd;
  if (levels > 0) {
    validate_levels(d.c_bnd, levels);
    if (q.size() != sites)
      throw ShapeError("pack_code: level map has " + std::to_string(q.size()) + " sites, code has " +
                       std::to_string(sites));
    for (int v : q) {
      if (v < 0 || v >= levels) throw RangeError("pack_code: level " + std::to_string(v) + " out of range");
      w.put(static_cast<std::uint64_t>(v), prefix_width(levels));
    }
    group = d.c_bnd / levels;
  }
  for (std::size_t i = 0; i < sites; ++i) {
    const int keep = levels > 0 ? group * q[i] : d.c_bnd;
    for (int c = 0; c < keep; ++c) {
      const T v = code[c * sites + i];
      if (v != T(1) && v != T(-1))
        throw DomainError("pack_code: kept code value " + std::to_string(static_cast<double>(v)) +
                          " is not +-1");
      w.put_bit(v > 0);
    }
  }
  return w.take();
}

struct UnpackedCode {
  std::vector<float> code;  // masked channels are 0
  std::vector<int> levels;  // empty when no bit assignment
};

inline UnpackedCode unpack_code(std::span<const std::uint8_t> bits, const CodeDims& d, int levels) {
  bitstream::BitReader r(bits);
  const std::size_t sites = d.sites();
  UnpackedCode out;
  out.code.assign(d.size(), 0.0f);
  std::size_t expected = d.size();
  if (levels > 0) {
    validate_levels(d.c_bnd, levels);
    out.levels.resize(sites);
    for (auto& v : out.levels) {
      v = static_cast<int>(r.get(prefix_width(levels)));
      if (v >= levels)
        throw FormatError("unpack_code: level " + std::to_string(v) + " exceeds L - 1");
    }
    expected = transmitted_bits(out.levels, d, levels);
  }
  if (bits.size() != expected)
    throw TruncationError("unpack_code: expected " + std::to_string(expected) + " bits, got " +
                          std::to_string(bits.size()));
  for (std::size_t i = 0; i < sites; ++i) {
    const int keep = levels > 0 ? (d.c_bnd / levels) * out.levels[i] : d.c_bnd;
    for (int c = 0; c < keep; ++c) out.code[c * sites + i] = r.get(1) ? 1.0f : -1.0f;
  }
  return out;
}

}  // namespace motionlab::dba
