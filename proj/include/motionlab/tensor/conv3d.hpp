#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "motionlab/error.hpp"
#include "motionlab/parallel.hpp"
#include "motionlab/tensor/tensor.hpp"

namespace motionlab::tensor {

/// Per-axis (time, height, width) convolution geometry.
struct Conv3dOptions {
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> dilation{1, 1, 1};
  std::array<int, 3> padding{0, 0, 0};
};

/// Output extent along one axis; may be <= 0 for invalid geometry.
constexpr std::int64_t conv_out_size(std::int64_t in, int kernel, int stride,
                                     int dilation, int pad) {
  return (in + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1;
}

namespace detail {

/// Columns of the im2col matrix are processed in fixed-size chunks. Each
/// chunk is one task; reductions over chunks run in chunk order so results
/// never depend on the worker count.
inline constexpr std::int64_t kConvChunk = 256;

struct ConvGeometry {
  std::int64_t N, Cin, T, H, W;
  std::int64_t Cout, KT, KH, KW;
  std::int64_t OT, OH, OW;
  Conv3dOptions opt;

  std::int64_t K() const { return Cin * KT * KH * KW; }
  std::int64_t P() const { return OT * OH * OW; }
  std::int64_t chunks() const { return (P() + kConvChunk - 1) / kConvChunk; }
  /// 1x1x1 kernel, unit stride, no padding: the input is its own im2col.
  bool pointwise() const {
    return KT == 1 && KH == 1 && KW == 1 && opt.stride == std::array<int, 3>{1, 1, 1} &&
           opt.padding == std::array<int, 3>{0, 0, 0};
  }
};

/// Visits the output chunk [p0, p0 + pc) as runs along the output width.
/// For each run and kernel tap, fn(k, j, it, ih, ow_lo, ow_hi, iw0, run)
/// receives the row k, the column offset j of the run, the input plane
/// coordinates (or -1 when outside), and the valid [ow_lo, ow_hi) part of
/// the run with input column iw = iw0 + ow * stride_w.
template <class Fn>
void for_each_run(const ConvGeometry& g, std::int64_t p0, std::int64_t pc, Fn&& fn) {
  const auto& o = g.opt;
  for (std::int64_t p = p0; p < p0 + pc;) {
    const std::int64_t ow0 = p % g.OW, oh = (p / g.OW) % g.OH, ot = p / (g.OW * g.OH);
    const std::int64_t run = std::min(g.OW - ow0, p0 + pc - p);
    std::int64_t k = 0;
    for (std::int64_t ci = 0; ci < g.Cin; ++ci)
      for (std::int64_t a = 0; a < g.KT; ++a) {
        const std::int64_t it = ot * o.stride[0] - o.padding[0] + a * o.dilation[0];
        for (std::int64_t b = 0; b < g.KH; ++b) {
          const std::int64_t ih = oh * o.stride[1] - o.padding[1] + b * o.dilation[1];
          const bool inside = it >= 0 && it < g.T && ih >= 0 && ih < g.H;
          for (std::int64_t c = 0; c < g.KW; ++c, ++k) {
            const std::int64_t iw0 = c * o.dilation[2] - o.padding[2];
            // Valid ow satisfy 0 <= iw0 + ow * s < W.
            std::int64_t lo = ow0, hi = ow0;
            if (inside) {
              const std::int64_t s = o.stride[2];
              lo = std::max(ow0, iw0 >= 0 ? 0 : (-iw0 + s - 1) / s);
              hi = std::min(ow0 + run, g.W - 1 - iw0 < 0 ? 0 : (g.W - 1 - iw0) / s + 1);
              if (hi < lo) hi = lo;
            }
            fn(ci, k, p - p0, inside ? it : -1, ih, lo - ow0, hi - ow0, iw0 + ow0 * o.stride[2], run);
          }
        }
      }
    p += run;
  }
}

/// Fills cols (K x pc, row-major) for output columns [p0, p0 + pc).
template <class T>
void im2col(const ConvGeometry& g, const T* x, std::int64_t p0, std::int64_t pc, std::vector<T>& cols) {
  cols.resize(g.K() * pc);
  const std::int64_t sw = g.opt.stride[2];
  for_each_run(g, p0, pc,
               [&](std::int64_t ci, std::int64_t k, std::int64_t j, std::int64_t it, std::int64_t ih,
                   std::int64_t lo, std::int64_t hi, std::int64_t iw, std::int64_t run) {
                 T* row = cols.data() + k * pc + j;
                 for (std::int64_t q = 0; q < lo; ++q) row[q] = T(0);
                 if (hi > lo) {
                   const T* src = x + ((ci * g.T + it) * g.H + ih) * g.W + iw;
                   if (sw == 1)
                     for (std::int64_t q = lo; q < hi; ++q) row[q] = src[q];
                   else
                     for (std::int64_t q = lo; q < hi; ++q) row[q] = src[q * sw];
                 }
                 for (std::int64_t q = hi; q < run; ++q) row[q] = T(0);
               });
}

/// Scatter-adds dcols back into dx (adjoint of im2col).
template <class T>
void col2im(const ConvGeometry& g, const std::vector<T>& dcols, std::int64_t p0, std::int64_t pc, T* dx) {
  const std::int64_t sw = g.opt.stride[2];
  for_each_run(g, p0, pc,
               [&](std::int64_t ci, std::int64_t k, std::int64_t j, std::int64_t it, std::int64_t ih,
                   std::int64_t lo, std::int64_t hi, std::int64_t iw, std::int64_t) {
                 if (hi <= lo) return;
                 const T* row = dcols.data() + k * pc + j;
                 T* dst = dx + ((ci * g.T + it) * g.H + ih) * g.W + iw;
                 if (sw == 1)
                   for (std::int64_t q = lo; q < hi; ++q) dst[q] += row[q];
                 else
                   for (std::int64_t q = lo; q < hi; ++q) dst[q * sw] += row[q];
               });
}

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace detail

/// 3D cross-correlation. weight is (out_ch, in_ch, kt, kh, kw); bias is
/// (1, out_ch, 1, 1, 1) or undefined.
template <class T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, const Conv3dOptions& opt = {}) {
  const Shape5 xs = input.shape(), ws = weight.shape();
  if (ws.c() != xs.c())
    throw ShapeError("conv3d: input " + xs.str() + " vs weight " + ws.str());
  if (bias.defined() && bias.shape() != Shape5{1, ws.n(), 1, 1, 1})
    throw ShapeError("conv3d: bias " + bias.shape().str() + " vs weight " +
                     ws.str());
  for (int i = 0; i < 3; ++i)
    if (opt.stride[i] < 1 || opt.dilation[i] < 1 || opt.padding[i] < 0)
      throw ShapeError("conv3d: invalid stride/dilation/padding");

  detail::ConvGeometry g{xs.n(), xs.c(), xs.t(), xs.h(), xs.w(),
                         ws.n(), ws.t(), ws.h(), ws.w(),
                         conv_out_size(xs.t(), ws.t(), opt.stride[0], opt.dilation[0], opt.padding[0]),
                         conv_out_size(xs.h(), ws.h(), opt.stride[1], opt.dilation[1], opt.padding[1]),
                         conv_out_size(xs.w(), ws.w(), opt.stride[2], opt.dilation[2], opt.padding[2]),
                         opt};
  if (g.OT < 1 || g.OH < 1 || g.OW < 1)
    throw ShapeError("conv3d: input " + xs.str() + " with weight " + ws.str() +
                     " gives empty output");

  const Shape5 out_shape{g.N, g.Cout, g.OT, g.OH, g.OW};
  std::vector<T> out(out_shape.numel());
  const std::int64_t K = g.K(), P = g.P(), chunks = g.chunks();
  const T* xv = input.values().data();
  const T* wv = weight.values().data();
  const T* bv = bias.defined() ? bias.values().data() : nullptr;

  parallel_for(static_cast<std::size_t>(g.N * chunks), [&](std::size_t task) {
    const std::int64_t n = task / chunks, chunk = task % chunks;
    const std::int64_t p0 = chunk * detail::kConvChunk;
    const std::int64_t pc = std::min(detail::kConvChunk, P - p0);
    std::vector<T> cols;
    const T* xn = xv + n * g.Cin * g.T * g.H * g.W;
    if (!g.pointwise()) detail::im2col(g, xn, p0, pc, cols);
    Eigen::Map<const detail::RowMat<T>> wm(wv, g.Cout, K);
    Eigen::Map<const detail::RowMat<T>, 0, Eigen::OuterStride<>> cm(
        g.pointwise() ? xn + p0 : cols.data(), K, pc,
        Eigen::OuterStride<>(g.pointwise() ? P : pc));
    Eigen::Map<detail::RowMat<T>, 0, Eigen::OuterStride<>> ym(
        out.data() + n * g.Cout * P + p0, g.Cout, pc, Eigen::OuterStride<>(P));
    ym.noalias() = wm * cm;
    if (bv)
      for (std::int64_t co = 0; co < g.Cout; ++co) ym.row(co).array() += bv[co];
  });

  return make_result<T>(
      out_shape, std::move(out), {input, weight, bias}, "conv3d",
      [g](Node<T>& self) {
        const std::int64_t K = g.K(), P = g.P(), chunks = g.chunks();
        Node<T>& px = *self.parents[0];
        Node<T>& pw = *self.parents[1];
        const bool need_x = wants_grad(self, 0);
        const bool need_w = wants_grad(self, 1);
        const bool need_b = wants_grad(self, 2);
        const T* gy = self.grad.data();

        if (need_b) {
          auto& gb = self.parents[2]->ensure_grad();
          for (std::int64_t n = 0; n < g.N; ++n)
            for (std::int64_t co = 0; co < g.Cout; ++co) {
              const T* row = gy + (n * g.Cout + co) * P;
              T acc = 0;
              for (std::int64_t p = 0; p < P; ++p) acc += row[p];
              gb[co] += acc;
            }
        }
        if (!need_x && !need_w) return;

        T* gx = need_x ? px.ensure_grad().data() : nullptr;
        T* gw = need_w ? pw.ensure_grad().data() : nullptr;
        const std::int64_t tasks = g.N * chunks;
        const std::int64_t wave = static_cast<std::int64_t>(
            std::max<std::size_t>(1, worker_count()));

        struct Scratch {
          std::vector<T> cols, dcols, dw;
        };
        std::vector<Scratch> scratch(std::min(wave, tasks));

        // Tasks run in waves; within a wave chunks are independent, and their
        // contributions are folded in task order afterwards.
        for (std::int64_t first = 0; first < tasks; first += wave) {
          const std::int64_t count = std::min(wave, tasks - first);
          parallel_for(static_cast<std::size_t>(count), [&](std::size_t s) {
            const std::int64_t task = first + s;
            const std::int64_t n = task / chunks, chunk = task % chunks;
            const std::int64_t p0 = chunk * detail::kConvChunk;
            const std::int64_t pc = std::min(detail::kConvChunk, P - p0);
            Scratch& sc = scratch[s];
            Eigen::Map<const detail::RowMat<T>, 0, Eigen::OuterStride<>> gym(
                gy + n * g.Cout * P + p0, g.Cout, pc, Eigen::OuterStride<>(P));
            if (need_w) {
              const T* xn = px.value.data() + n * g.Cin * g.T * g.H * g.W;
              if (!g.pointwise()) detail::im2col(g, xn, p0, pc, sc.cols);
              sc.dw.resize(g.Cout * K);
              Eigen::Map<const detail::RowMat<T>, 0, Eigen::OuterStride<>> cm(
                  g.pointwise() ? xn + p0 : sc.cols.data(), K, pc,
                  Eigen::OuterStride<>(g.pointwise() ? P : pc));
              Eigen::Map<detail::RowMat<T>> dwm(sc.dw.data(), g.Cout, K);
              dwm.noalias() = gym * cm.transpose();
            }
            if (need_x) {
              sc.dcols.resize(K * pc);
              Eigen::Map<const detail::RowMat<T>> wm(pw.value.data(), g.Cout, K);
              Eigen::Map<detail::RowMat<T>> dcm(sc.dcols.data(), K, pc);
              dcm.noalias() = wm.transpose() * gym;
            }
          });
          for (std::int64_t s = 0; s < count; ++s) {
            const std::int64_t task = first + s;
            const std::int64_t n = task / chunks, chunk = task % chunks;
            const std::int64_t p0 = chunk * detail::kConvChunk;
            const std::int64_t pc = std::min(detail::kConvChunk, P - p0);
            Scratch& sc = scratch[s];
            if (need_w)
              for (std::int64_t i = 0; i < g.Cout * K; ++i) gw[i] += sc.dw[i];
            if (need_x)
              detail::col2im(g, sc.dcols, p0, pc,
                             gx + n * g.Cin * g.T * g.H * g.W);
          }
        }
      });
}

}  // namespace motionlab::tensor
