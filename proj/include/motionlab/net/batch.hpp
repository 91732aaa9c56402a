#pragma once

#include <algorithm>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/tensor/tensor.hpp"
#include "motionlab/video/gop.hpp"

namespace motionlab::net {

using tensor::Shape5;
using tensor::Tensor;

/// Stacks frames [first, first + count) of normalized clips into
/// (N, C, count, H, W).
template <class T>
Tensor<T> frames_tensor(const std::vector<const video::GopClip*>& clips, int first, int count) {
  if (clips.empty()) throw SizeError("frames_tensor: no clips");
  const auto& c0 = *clips.front();
  const int C = c0.channels(), H = c0.height(), W = c0.width();
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  std::vector<T> v;
  v.reserve(clips.size() * C * count * plane);
  for (const auto* clip : clips) {
    if (!clip->normalized()) throw StateError("frames_tensor: clip is not normalized");
    if (clip->channels() != C || clip->height() != H || clip->width() != W || first + count > clip->size())
      throw ShapeError("frames_tensor: clips in a batch must share geometry");
    for (int c = 0; c < C; ++c)
      for (int t = first; t < first + count; ++t) {
        const auto p = clip->frames[t].plane(c);
        v.insert(v.end(), p.begin(), p.end());
      }
  }
  return Tensor<T>::from({static_cast<std::int64_t>(clips.size()), C, count, H, W}, std::move(v));
}

template <class T>
Tensor<T> clip_tensor(const std::vector<const video::GopClip*>& clips) {
  return frames_tensor<T>(clips, 0, clips.front()->size());
}

/// One (N, C, 1, H, W) tensor per I-frame, in reference order.
template <class T>
std::vector<Tensor<T>> iframe_tensors(const std::vector<const video::GopClip*>& clips) {
  std::vector<Tensor<T>> out;
  for (int idx : clips.front()->reference_indices()) out.push_back(frames_tensor<T>(clips, idx, 1));
  return out;
}

/// Frames of batch item n as normalized frames.
template <class T>
std::vector<video::Frame> tensor_frames(const Tensor<T>& x, std::int64_t n) {
  const auto s = x.shape();
  const std::size_t plane = static_cast<std::size_t>(s.h() * s.w());
  std::vector<video::Frame> out;
  for (std::int64_t t = 0; t < s.t(); ++t) {
    std::vector<float> v(plane * s.c());
    for (std::int64_t c = 0; c < s.c(); ++c) {
      const T* src = x.values().data() + ((n * s.c() + c) * s.t() + t) * plane;
      for (std::size_t i = 0; i < plane; ++i)
        v[c * plane + i] = static_cast<float>(std::clamp<T>(src[i], T(-1), T(1)));
    }
    out.emplace_back(static_cast<int>(s.w()), static_cast<int>(s.h()), static_cast<int>(s.c()), std::move(v),
                     video::SampleDomain::Normalized);
  }
  return out;
}

}  // namespace motionlab::net
