#pragma once

#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/video/frame.hpp"

namespace motionlab::video {

/// I: reference frame. P/B: referencing frame. Pad: replicated frame added
/// by pad_clip to reach an axis multiple; never scored.
enum class FrameRole { I, P, B, Pad };

enum class GopKind { P, B };

inline char role_char(FrameRole r) {
  switch (r) {
    case FrameRole::I: return 'I';
    case FrameRole::P: return 'P';
    case FrameRole::B: return 'B';
    case FrameRole::Pad: return '-';
  }
  return '?';
}

/// Ordered frames with their prediction roles.
/// P GOP: [I, P, ..., P]. B GOP: [I, B, ..., B, I].
struct GopClip {
  std::vector<Frame> frames;
  std::vector<FrameRole> roles;
  GopKind kind = GopKind::P;

  int size() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int channels() const {
    return frames.empty() ? 0 : frames.front().channels();
  }
  bool normalized() const {
    return !frames.empty() && frames.front().normalized();
  }

  /// Number of I-frames: 1 for P GOPs, 2 for B GOPs.
  int reference_count() const { return kind == GopKind::P ? 1 : 2; }

  /// Indices of scored P/B frames (pads excluded).
  std::vector<int> referencing_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
      if (roles[i] == FrameRole::P || roles[i] == FrameRole::B)
        idx.push_back(i);
    return idx;
  }

  /// Indices of I-frames in order (past, then future for B GOPs).
  std::vector<int> reference_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
      if (roles[i] == FrameRole::I) idx.push_back(i);
    return idx;
  }
};

/// Assigns roles to a frame sequence. Throws SizeError below the minimum
/// length (2 for P, 3 for B) and ShapeError on mixed geometry.
inline GopClip structure_gop(std::vector<Frame> frames, GopKind kind) {
  const std::size_t min_len = kind == GopKind::P ? 2 : 3;
  if (frames.size() < min_len)
    throw SizeError(std::string(kind == GopKind::P ? "P" : "B") +
                    " GOP needs at least " + std::to_string(min_len) +
                    " frames, got " + std::to_string(frames.size()));
  for (const auto& f : frames)
    if (!f.same_geometry(frames.front()) ||
        f.domain() != frames.front().domain())
      throw ShapeError("GOP frames do not share geometry");
  GopClip clip;
  clip.kind = kind;
  clip.roles.assign(frames.size(),
                    kind == GopKind::P ? FrameRole::P : FrameRole::B);
  clip.roles.front() = FrameRole::I;
  if (kind == GopKind::B) clip.roles.back() = FrameRole::I;
  clip.frames = std::move(frames);
  return clip;
}

inline GopClip normalize(const GopClip& clip) {
  GopClip out = clip;
  for (auto& f : out.frames) f = normalize_frame(f);
  return out;
}

inline GopClip denormalize(const GopClip& clip) {
  GopClip out = clip;
  for (auto& f : out.frames) f = denormalize_frame(f);
  return out;
}

/// Dimensions of a clip before padding.
struct OriginalDims {
  int frames = 0;
  int height = 0;
  int width = 0;
  friend bool operator==(const OriginalDims&, const OriginalDims&) = default;
};

struct PaddedClip {
  GopClip clip;
  OriginalDims original;
};

inline int round_up(int v, int multiple) {
  return (v + multiple - 1) / multiple * multiple;
}

/// Pads time (last-frame replication) and space (edge replication) up to
/// the next multiple. Added frames get FrameRole::Pad.
inline PaddedClip pad_clip(const GopClip& clip, int multiple) {
  if (multiple < 1) throw ConfigError("pad multiple must be >= 1");
  if (clip.frames.empty()) throw SizeError("cannot pad an empty clip");
  PaddedClip out;
  out.original = {clip.size(), clip.height(), clip.width()};
  const int W = round_up(clip.width(), multiple);
  const int H = round_up(clip.height(), multiple);
  const int T = round_up(clip.size(), multiple);
  out.clip.kind = clip.kind;
  out.clip.roles = clip.roles;
  out.clip.roles.resize(T, FrameRole::Pad);
  out.clip.frames.reserve(T);
  for (int t = 0; t < T; ++t) {
    const Frame& src = clip.frames[std::min(t, clip.size() - 1)];
    if (W == src.width() && H == src.height()) {
      out.clip.frames.push_back(src);
      continue;
    }
    Frame f(W, H, src.channels(), src.domain());
    for (int c = 0; c < src.channels(); ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          f.at(c, y, x) = src.at(c, std::min(y, src.height() - 1),
                                 std::min(x, src.width() - 1));
    out.clip.frames.push_back(std::move(f));
  }
  return out;
}

/// Inverse of pad_clip.
inline GopClip crop_clip(const GopClip& clip, const OriginalDims& dims) {
  if (dims.frames > clip.size() || dims.height > clip.height() ||
      dims.width > clip.width())
    throw ShapeError("crop dims exceed clip dims");
  GopClip out;
  out.kind = clip.kind;
  out.roles.assign(clip.roles.begin(), clip.roles.begin() + dims.frames);
  for (int t = 0; t < dims.frames; ++t) {
    const Frame& src = clip.frames[t];
    if (src.width() == dims.width && src.height() == dims.height) {
      out.frames.push_back(src);
      continue;
    }
    Frame f(dims.width, dims.height, src.channels(), src.domain());
    for (int c = 0; c < src.channels(); ++c)
      for (int y = 0; y < dims.height; ++y)
        for (int x = 0; x < dims.width; ++x) f.at(c, y, x) = src.at(c, y, x);
    out.frames.push_back(std::move(f));
  }
  return out;
}

}  // namespace motionlab::video
