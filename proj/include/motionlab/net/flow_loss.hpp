#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/metrics/quality.hpp"
#include "motionlab/motion/search.hpp"
#include "motionlab/net/batch.hpp"

namespace motionlab::net {

using metrics::FlowDivergence;

/// Flow-field divergence between aligned sequences; EPE or cosine.
inline double loss_flow(const std::vector<motion::MotionField>& pred,
                        const std::vector<motion::MotionField>& truth, FlowDivergence kind) {
  return metrics::flow_divergence(truth, pred, kind, true);
}

namespace detail {

/// Luma plane of frame t of batch item n as a one-channel normalized frame.
template <class T>
video::Frame luma_frame(const Tensor<T>& x, std::int64_t n, std::int64_t t) {
  const auto s = x.shape();
  const std::size_t plane = static_cast<std::size_t>(s.h() * s.w());
  const T* src = x.values().data() + ((n * s.c()) * s.t() + t) * plane;
  std::vector<float> v(plane);
  for (std::size_t i = 0; i < plane; ++i) v[i] = static_cast<float>(std::clamp<T>(src[i], T(-1), T(1)));
  return video::Frame(static_cast<int>(s.w()), static_cast<int>(s.h()), 1, std::move(v),
                      video::SampleDomain::Normalized);
}

}  // namespace detail

/// Flow loss over predicted frames. Motion is estimated with dense_flow on
/// consecutive predicted frames (the first against the leading I-frame) and
/// on the matching target frames. The value is alpha times the summed
/// (W, H)-normalized end-point error. The estimator is not differentiable,
/// so the backward pass uses a compensation surrogate: for each block whose
/// vectors disagree, the gradient of |dv| * MAD between the predicted block
/// and the previous predicted frame displaced by the true vector. This pulls
/// the prediction toward being a displacement of its predecessor by the
/// target's motion.
template <class T>
Tensor<T> flow_loss_epe(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& first_ref,
                        int range, double alpha) {
  const auto s = pred.shape();
  if (s != target.shape()) throw ShapeError("flow_loss: pred " + s.str() + " vs target " + target.shape().str());
  const int W = static_cast<int>(s.w()), H = static_cast<int>(s.h());
  struct Term {
    std::int64_t n, t;
    motion::MotionField vp, vg;
  };
  std::vector<Term> terms;
  double total = 0;
  for (std::int64_t n = 0; n < s.n(); ++n)
    for (std::int64_t t = 0; t < s.t(); ++t) {
      const auto prev_p = t == 0 ? detail::luma_frame(first_ref, n, 0) : detail::luma_frame(pred, n, t - 1);
      const auto prev_g = t == 0 ? detail::luma_frame(first_ref, n, 0) : detail::luma_frame(target, n, t - 1);
      Term term{n, t, motion::dense_flow(prev_p, detail::luma_frame(pred, n, t), range),
                motion::dense_flow(prev_g, detail::luma_frame(target, n, t), range)};
      for (std::size_t i = 0; i < term.vp.size(); ++i)
        total += std::hypot(static_cast<double>(term.vp.vectors[i].dx - term.vg.vectors[i].dx) / W,
                            static_cast<double>(term.vp.vectors[i].dy - term.vg.vectors[i].dy) / H);
      terms.push_back(std::move(term));
    }
  return tensor::make_result<T>(
      tensor::kScalarShape, {static_cast<T>(alpha * total)}, {pred, first_ref}, "flow_loss_epe",
      [terms = std::move(terms), alpha, W, H, s](tensor::Node<T>& self) {
        auto& pp = *self.parents[0];
        auto& ref = *self.parents[1];
        auto& g = pp.ensure_grad();
        const std::size_t plane = static_cast<std::size_t>(W) * H;
        auto at = [&](std::int64_t n, std::int64_t t) { return ((n * s.c()) * s.t() + t) * plane; };
        const double up = self.grad[0];
        for (const auto& term : terms) {
          const T* cur = pp.value.data() + at(term.n, term.t);
          const T* prev = term.t == 0 ? ref.value.data() + term.n * s.c() * plane
                                      : pp.value.data() + at(term.n, term.t - 1);
          T* gcur = g.data() + at(term.n, term.t);
          T* gprev = term.t == 0 ? nullptr : g.data() + at(term.n, term.t - 1);
          const int B = term.vp.block;
          for (int r = 0; r < term.vp.rows; ++r)
            for (int c = 0; c < term.vp.cols; ++c) {
              const auto vp = term.vp.at(r, c), vg = term.vg.at(r, c);
              if (vp == vg) continue;
              const double mag = std::hypot(static_cast<double>(vp.dx - vg.dx) / W,
                                            static_cast<double>(vp.dy - vg.dy) / H);
              const double wgt = up * alpha * mag / (B * B);
              for (int y = r * B; y < std::min(H, (r + 1) * B); ++y)
                for (int x = c * B; x < std::min(W, (c + 1) * B); ++x) {
                  const std::size_t i = static_cast<std::size_t>(y) * W + x;
                  const std::size_t ig = static_cast<std::size_t>(std::clamp(y + vg.dy, 0, H - 1)) * W +
                                         std::clamp(x + vg.dx, 0, W - 1);
                  const double sg = cur[i] > prev[ig] ? 1.0 : (cur[i] < prev[ig] ? -1.0 : 0.0);
                  gcur[i] += static_cast<T>(wgt * sg);
                  if (gprev) gprev[ig] -= static_cast<T>(wgt * sg);
                }
            }
        }
      });
}

}  // namespace motionlab::net
