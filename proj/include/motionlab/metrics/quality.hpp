#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/motion/field.hpp"
#include "motionlab/video/frame.hpp"

namespace motionlab::metrics {

using video::Frame;

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(255^2 / MSE) over all samples of two 8-bit frames.
inline double psnr(const Frame& a, const Frame& b) {
  if (!a.same_geometry(b)) throw ShapeError("psnr: frame geometry differs");
  if (a.normalized() || b.normalized()) throw StateError("psnr expects 8-bit frames");
  double se = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data().size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 255.0;
};

/// Normalized 1D Gaussian taps.
inline std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double s = 0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

/// Single-scale SSIM on luma, averaged over every full window position.
inline double ssim(const Frame& a, const Frame& b, const SsimOptions& o = {}) {
  if (!a.same_geometry(b)) throw ShapeError("ssim: frame geometry differs");
  const int W = a.width(), H = a.height(), k = o.window;
  if (W < k || H < k)
    throw SizeError("ssim: frame " + std::to_string(W) + "x" + std::to_string(H) +
                    " smaller than window " + std::to_string(k));
  const auto g = gaussian_taps(k, o.sigma);
  const int ow = W - k + 1, oh = H - k + 1;
  // Five moment images, filtered horizontally then vertically.
  std::array<std::vector<double>, 5> hpass;
  for (auto& v : hpass) v.assign(static_cast<std::size_t>(H) * ow, 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < ow; ++x) {
      std::array<double, 5> acc{};
      for (int i = 0; i < k; ++i) {
        const double pa = a.at(0, y, x + i), pb = b.at(0, y, x + i);
        acc[0] += g[i] * pa;
        acc[1] += g[i] * pb;
        acc[2] += g[i] * pa * pa;
        acc[3] += g[i] * pb * pb;
        acc[4] += g[i] * pa * pb;
      }
      for (int m = 0; m < 5; ++m) hpass[m][static_cast<std::size_t>(y) * ow + x] = acc[m];
    }
  const double c1 = (o.k1 * o.range) * (o.k1 * o.range);
  const double c2 = (o.k2 * o.range) * (o.k2 * o.range);
  double total = 0;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      std::array<double, 5> m{};
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < 5; ++j) m[j] += g[i] * hpass[j][static_cast<std::size_t>(y + i) * ow + x];
      const double va = m[2] - m[0] * m[0], vb = m[3] - m[1] * m[1], cov = m[4] - m[0] * m[1];
      total += ((2 * m[0] * m[1] + c1) * (2 * cov + c2)) /
               ((m[0] * m[0] + m[1] * m[1] + c1) * (va + vb + c2));
    }
  return total / (static_cast<double>(ow) * oh);
}

enum class FlowDivergence { Epe, Cosine };

/// Mean end-point error or mean (1 - cosine) between aligned field
/// sequences. With normalize, components are divided by frame width and
/// height. A pair with a zero vector contributes 0 to the cosine form.
inline double flow_divergence(const std::vector<motion::MotionField>& truth,
                              const std::vector<motion::MotionField>& pred, FlowDivergence kind,
                              bool normalize) {
  if (truth.size() != pred.size()) throw ShapeError("flow_divergence: sequence lengths differ");
  double total = 0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < truth.size(); ++f) {
    const auto& g = truth[f];
    const auto& p = pred[f];
    if (!g.same_grid(p) || g.size() != p.size()) throw ShapeError("flow_divergence: field grids differ");
    const double sx = normalize ? 1.0 / g.frame_width : 1.0;
    const double sy = normalize ? 1.0 / g.frame_height : 1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gx = g.vectors[i].dx * sx, gy = g.vectors[i].dy * sy;
      const double px = p.vectors[i].dx * sx, py = p.vectors[i].dy * sy;
      if (kind == FlowDivergence::Epe) {
        total += std::hypot(gx - px, gy - py);
      } else {
        const double ng = std::hypot(gx, gy), np = std::hypot(px, py);
        if (ng > 0 && np > 0) total += 1.0 - (gx * px + gy * py) / (ng * np);
      }
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

/// Per-frame scores over a clip's predicted frames and their means.
struct QualityReport {
  std::vector<double> psnr;
  std::vector<double> ssim;
  double psnr_mean = 0;
  double ssim_mean = 0;
  double epe = 0;
  double cosine = 0;
  double bpp = 0;
  double encode_s = 0;
  double decode_s = 0;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// PSNR and SSIM for each (original, predicted) pair; means unweighted.
inline QualityReport score_frames(const std::vector<Frame>& original,
                                  const std::vector<Frame>& predicted) {
  if (original.size() != predicted.size()) throw ShapeError("score_frames: frame counts differ");
  QualityReport r;
  for (std::size_t i = 0; i < original.size(); ++i) {
    r.psnr.push_back(psnr(original[i], predicted[i]));
    r.ssim.push_back(ssim(original[i], predicted[i]));
  }
  r.psnr_mean = mean_of(r.psnr);
  r.ssim_mean = mean_of(r.ssim);
  return r;
}

}  // namespace motionlab::metrics
