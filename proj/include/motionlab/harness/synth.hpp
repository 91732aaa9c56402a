#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/motion/field.hpp"
#include "motionlab/video/gop.hpp"

namespace motionlab::harness {

using motion::MotionField;
using motion::MotionVector;

enum class SynthKind { Static, Translate, TwoObjects, Rotate };

inline SynthKind parse_synth_kind(const std::string& s) {
  if (s == "static") return SynthKind::Static;
  if (s == "translate") return SynthKind::Translate;
  if (s == "two_objects") return SynthKind::TwoObjects;
  if (s == "rotate") return SynthKind::Rotate;
  throw ConfigError("unknown synthetic clip kind '" + s + "'");
}

inline const char* synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::Static: return "static";
    case SynthKind::Translate: return "translate";
    case SynthKind::TwoObjects: return "two_objects";
    case SynthKind::Rotate: return "rotate";
  }
  return "?";
}

/// Velocities are per-frame motion vectors: frame t at x equals frame t-1
/// at x + v, so picture content travels by -v.
struct SynthParams {
  MotionVector velocity{3, -2};
  MotionVector object_a{2, 0};
  MotionVector object_b{0, 2};
  int object_size = 16;
  double degrees_per_frame = 2.0;
  int range = 7;
  int truth_block = 4;
  video::GopKind gop = video::GopKind::P;
};

struct SynthClip {
  video::GopClip clip;
  /// truth[k] relates frame k+1 (target) to frame k (reference).
  std::vector<MotionField> truth;
  /// Per-pixel owner in each frame: 0 background, 1 object a, 2 object b.
  std::vector<std::vector<std::uint8_t>> owner;
  bool approximate_truth = false;
};

namespace detail {

inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const auto h = mix(seed ^ mix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ull ^
                                static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Smooth value noise in [0, 1) with feature size `scale` pixels.
inline double value_noise(double x, double y, double scale, std::uint64_t seed) {
  const double fx = x / scale, fy = y / scale;
  const double x0 = std::floor(fx), y0 = std::floor(fy);
  const double tx = fx - x0, ty = fy - y0;
  const double sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
  const auto ix = static_cast<std::int64_t>(x0), iy = static_cast<std::int64_t>(y0);
  const double a = lattice(ix, iy, seed), b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed), d = lattice(ix + 1, iy + 1, seed);
  return (a + (b - a) * sx) + ((c + (d - c) * sx) - (a + (b - a) * sx)) * sy;
}

/// Textured YUV sample at a continuous position.
struct Texture {
  std::uint64_t seed;
  double contrast;

  double luma(double x, double y) const {
    const double v = 0.5 * value_noise(x, y, 3.0, seed) + 0.3 * value_noise(x, y, 7.0, seed + 1) +
                     0.2 * value_noise(x, y, 17.0, seed + 2);
    return 128.0 + contrast * (v - 0.5) * 2.0;
  }
  double chroma(int c, double x, double y) const {
    return 128.0 + 0.4 * contrast * (value_noise(x, y, 11.0, seed + 7 + c) - 0.5) * 2.0;
  }
  float sample(int c, double x, double y) const {
    const double v = c == 0 ? luma(x, y) : chroma(c, x, y);
    return static_cast<float>(std::clamp(std::nearbyint(v), 0.0, 255.0));
  }
};

inline void check_range(MotionVector v, int range) {
  if (std::abs(v.dx) > range || std::abs(v.dy) > range)
    throw ConfigError("synthetic velocity (" + std::to_string(v.dx) + "," + std::to_string(v.dy) +
                      ") exceeds search range " + std::to_string(range));
}

}  // namespace detail

/// Deterministic synthetic GOP with its ground-truth motion.
inline SynthClip synth_clip(SynthKind kind, int frames, int width, int height,
                            const SynthParams& prm, std::uint64_t seed) {
  if (width < 16 || height < 16) throw SizeError("synthetic clips need at least 16x16 pixels");
  if (frames < 2) throw SizeError("synthetic clips need at least 2 frames");
  const detail::Texture bg{detail::mix(seed), kind == SynthKind::TwoObjects ? 45.0 : 90.0};
  const detail::Texture tex_a{detail::mix(seed + 101), 110.0};
  const detail::Texture tex_b{detail::mix(seed + 202), 110.0};
  const int S = prm.object_size;

  // Object start positions keep the whole trajectory inside the frame.
  MotionVector start_a{}, start_b{};
  if (kind == SynthKind::TwoObjects) {
    detail::check_range(prm.object_a, prm.range);
    detail::check_range(prm.object_b, prm.range);
    auto place = [&](MotionVector v, std::uint64_t salt, int W, int H) {
      const int travel_x = std::abs(v.dx) * (frames - 1), travel_y = std::abs(v.dy) * (frames - 1);
      const int span_x = W - S - travel_x, span_y = H - S - travel_y;
      if (span_x < 0 || span_y < 0)
        throw ConfigError("object trajectory does not fit in the frame");
      const auto h = detail::mix(seed * 31 + salt);
      MotionVector p{static_cast<int>(h % (span_x + 1)), static_cast<int>((h >> 32) % (span_y + 1))};
      // Content travels by -v; start where the whole path stays inside.
      if (v.dx > 0) p.dx += travel_x;
      if (v.dy > 0) p.dy += travel_y;
      return p;
    };
    start_a = place(prm.object_a, 1, width, height);
    start_b = place(prm.object_b, 2, width, height);
  }
  if (kind == SynthKind::Translate) detail::check_range(prm.velocity, prm.range);

  SynthClip out;
  std::vector<video::Frame> seq;
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  const double step = prm.degrees_per_frame * 3.14159265358979323846 / 180.0;
  for (int t = 0; t < frames; ++t) {
    video::Frame f(width, height, 3);
    std::vector<std::uint8_t> owner(static_cast<std::size_t>(width) * height, 0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double sx = x, sy = y;
        const detail::Texture* tex = &bg;
        switch (kind) {
          case SynthKind::Static: break;
          case SynthKind::Translate:
            sx = x + t * prm.velocity.dx;
            sy = y + t * prm.velocity.dy;
            break;
          case SynthKind::Rotate: {
            const double a = step * t, c = std::cos(a), s = std::sin(a);
            sx = c * (x - cx) - s * (y - cy) + cx;
            sy = s * (x - cx) + c * (y - cy) + cy;
            break;
          }
          case SynthKind::TwoObjects: {
            // Object b is drawn over object a.
            const MotionVector objs[2] = {prm.object_a, prm.object_b};
            const MotionVector starts[2] = {start_a, start_b};
            for (int k = 0; k < 2; ++k) {
              const int ox = starts[k].dx - t * objs[k].dx, oy = starts[k].dy - t * objs[k].dy;
              if (x >= ox && x < ox + S && y >= oy && y < oy + S) {
                tex = k == 0 ? &tex_a : &tex_b;
                sx = x - ox;
                sy = y - oy;
                owner[static_cast<std::size_t>(y) * width + x] = static_cast<std::uint8_t>(k + 1);
              }
            }
            break;
          }
        }
        for (int c = 0; c < 3; ++c) f.at(c, y, x) = tex->sample(c, sx, sy);
      }
    seq.push_back(std::move(f));
    out.owner.push_back(std::move(owner));
  }
  out.clip = video::structure_gop(std::move(seq), prm.gop);
  out.approximate_truth = kind == SynthKind::Rotate;

  for (int t = 1; t < frames; ++t) {
    MotionField field = MotionField::zeros(width, height, prm.truth_block);
    for (int r = 0; r < field.rows; ++r)
      for (int c = 0; c < field.cols; ++c) {
        const int px = std::min(c * prm.truth_block + prm.truth_block / 2, width - 1);
        const int py = std::min(r * prm.truth_block + prm.truth_block / 2, height - 1);
        MotionVector v{};
        switch (kind) {
          case SynthKind::Static: break;
          case SynthKind::Translate: v = prm.velocity; break;
          case SynthKind::TwoObjects: {
            const int o = out.owner[t][static_cast<std::size_t>(py) * width + px];
            if (o == 1) v = prm.object_a;
            if (o == 2) v = prm.object_b;
            break;
          }
          case SynthKind::Rotate: {
            const double c0 = std::cos(step), s0 = std::sin(step);
            const double qx = c0 * (px - cx) - s0 * (py - cy) + cx;
            const double qy = s0 * (px - cx) + c0 * (py - cy) + cy;
            v = {static_cast<int>(std::lround(qx - px)), static_cast<int>(std::lround(qy - py))};
            v.dx = std::clamp(v.dx, -prm.range, prm.range);
            v.dy = std::clamp(v.dy, -prm.range, prm.range);
            break;
          }
        }
        field.at(r, c) = v;
      }
    out.truth.push_back(std::move(field));
  }
  return out;
}

}  // namespace motionlab::harness
