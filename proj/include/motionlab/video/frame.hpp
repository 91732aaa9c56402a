#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "motionlab/error.hpp"

namespace motionlab::video {

/// Whether samples hold 8-bit code values or the network's [-1, 1] range.
enum class SampleDomain { Byte, Normalized };

/// A planar (channel, row, column) picture. Channel 0 is luma for
/// three-channel frames; chroma is stored at full resolution.
class Frame {
 public:
  Frame() = default;

  Frame(int width, int height, int channels,
        SampleDomain domain = SampleDomain::Byte)
      : width_(width), height_(height), channels_(channels), domain_(domain) {
    check_dims();
    data_.assign(static_cast<std::size_t>(width) * height * channels,
                 domain == SampleDomain::Byte ? 0.0f : -1.0f);
  }

  Frame(int width, int height, int channels, std::vector<float> data,
        SampleDomain domain = SampleDomain::Byte)
      : width_(width),
        height_(height),
        channels_(channels),
        domain_(domain),
        data_(std::move(data)) {
    check_dims();
    if (data_.size() != static_cast<std::size_t>(width) * height * channels)
      throw ShapeError("frame data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(width) + "x" +
                       std::to_string(height) + "x" + std::to_string(channels));
    const float lo = domain == SampleDomain::Byte ? 0.0f : -1.0f;
    const float hi = domain == SampleDomain::Byte ? 255.0f : 1.0f;
    for (float v : data_)
      if (!(v >= lo && v <= hi))
        throw DomainError("frame sample " + std::to_string(v) +
                          " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  SampleDomain domain() const { return domain_; }
  bool normalized() const { return domain_ == SampleDomain::Normalized; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  std::span<const float> plane(int c) const {
    return std::span<const float>(data_).subspan(c * plane_size(),
                                                 plane_size());
  }
  std::span<float> plane(int c) {
    return std::span<float>(data_).subspan(c * plane_size(), plane_size());
  }

  float at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  float& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  bool same_geometry(const Frame& o) const {
    return width_ == o.width_ && height_ == o.height_ &&
           channels_ == o.channels_;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  void check_dims() const {
    if (width_ <= 0 || height_ <= 0 || (channels_ != 1 && channels_ != 3))
      throw ShapeError("invalid frame geometry " + std::to_string(width_) +
                       "x" + std::to_string(height_) + "x" +
                       std::to_string(channels_));
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  SampleDomain domain_ = SampleDomain::Byte;
  std::vector<float> data_;
};

/// Maps 8-bit code values to [-1, 1] via x / 127.5 - 1.
inline Frame normalize_frame(const Frame& f) {
  if (f.normalized()) throw StateError("frame is already normalized");
  std::vector<float> out(f.data().begin(), f.data().end());
  for (float& v : out) v = static_cast<float>(v / 127.5 - 1.0);
  return Frame(f.width(), f.height(), f.channels(), std::move(out),
               SampleDomain::Normalized);
}

/// Inverse of normalize_frame, rounded to nearest and clamped to [0, 255].
inline Frame denormalize_frame(const Frame& f) {
  if (!f.normalized()) throw StateError("frame is not normalized");
  std::vector<float> out(f.data().begin(), f.data().end());
  for (float& v : out)
    v = std::clamp(static_cast<float>(std::nearbyint((v + 1.0) * 127.5)), 0.0f, 255.0f);
  return Frame(f.width(), f.height(), f.channels(), std::move(out),
               SampleDomain::Byte);
}

/// Luma plane. Frames are stored as YUV, so this is channel 0.
inline std::vector<float> luma(const Frame& f) {
  auto p = f.plane(0);
  return {p.begin(), p.end()};
}

/// BT.601 full-range RGB -> YUV on 8-bit frames.
inline Frame rgb_to_yuv(const Frame& rgb) {
  if (rgb.channels() != 3 || rgb.normalized())
    throw ShapeError("rgb_to_yuv expects a 3-channel 8-bit frame");
  Frame out(rgb.width(), rgb.height(), 3);
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x) {
      const float r = rgb.at(0, y, x), g = rgb.at(1, y, x), b = rgb.at(2, y, x);
      const float Y = 0.299f * r + 0.587f * g + 0.114f * b;
      const float U = -0.168736f * r - 0.331264f * g + 0.5f * b + 128.0f;
      const float V = 0.5f * r - 0.418688f * g - 0.081312f * b + 128.0f;
      out.at(0, y, x) = std::clamp(std::nearbyint(Y), 0.0f, 255.0f);
      out.at(1, y, x) = std::clamp(std::nearbyint(U), 0.0f, 255.0f);
      out.at(2, y, x) = std::clamp(std::nearbyint(V), 0.0f, 255.0f);
    }
  return out;
}

/// BT.601 full-range YUV -> RGB on 8-bit frames.
inline Frame yuv_to_rgb(const Frame& yuv) {
  if (yuv.channels() != 3 || yuv.normalized())
    throw ShapeError("yuv_to_rgb expects a 3-channel 8-bit frame");
  Frame out(yuv.width(), yuv.height(), 3);
  for (int y = 0; y < yuv.height(); ++y)
    for (int x = 0; x < yuv.width(); ++x) {
      const float Y = yuv.at(0, y, x), U = yuv.at(1, y, x) - 128.0f,
                  V = yuv.at(2, y, x) - 128.0f;
      out.at(0, y, x) = std::clamp(std::nearbyint(Y + 1.402f * V), 0.0f, 255.0f);
      out.at(1, y, x) = std::clamp(
          std::nearbyint(Y - 0.344136f * U - 0.714136f * V), 0.0f, 255.0f);
      out.at(2, y, x) = std::clamp(std::nearbyint(Y + 1.772f * U), 0.0f, 255.0f);
    }
  return out;
}

}  // namespace motionlab::video
