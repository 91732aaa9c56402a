#pragma once

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "motionlab/bitstream/bits.hpp"
#include "motionlab/error.hpp"
#include "motionlab/motion/field.hpp"

namespace motionlab::bitstream {

using motion::MotionField;
using motion::MotionVector;

/// Block grid and search range shared by encoder and decoder.
struct MvGeometry {
  int width = 0;
  int height = 0;
  int block = 16;
  int range = 7;
  int frames = 0;
  bool mvd = false;

  int cols() const { return (width + block - 1) / block; }
  int rows() const { return (height + block - 1) / block; }
  int blocks() const { return cols() * rows(); }
  int component_bits() const { return 1 + ceil_log2(range + 1); }
  int difference_bits() const { return 1 + ceil_log2(2 * range + 1); }
  int x_bits() const { return ceil_log2(width); }
  int y_bits() const { return ceil_log2(height); }
  /// Per-frame record count field; reshaping overhead, not counted.
  int count_bits() const { return ceil_log2(blocks() + 1); }
};

struct MvPayload {
  Bits bits;
  /// Bits that carry motion: records, plus predictors in MVD mode.
  std::size_t counted_bits = 0;
};

/// Per-frame motion-vector predictors and the residual fields.
struct MvdFields {
  std::vector<MotionField> differences;
  std::vector<MotionVector> predictors;
};

/// Component-wise mean of nonzero vectors, rounded half away from zero.
inline MotionVector motion_vector_predictor(const MotionField& f) {
  long sx = 0, sy = 0, n = 0;
  for (const auto& v : f.vectors)
    if (!v.zero()) {
      sx += v.dx;
      sy += v.dy;
      ++n;
    }
  if (n == 0) return {};
  return {static_cast<int>(std::lround(static_cast<double>(sx) / n)),
          static_cast<int>(std::lround(static_cast<double>(sy) / n))};
}

inline MvdFields mvd_forward(const std::vector<MotionField>& fields) {
  MvdFields out;
  for (const auto& f : fields) {
    const MotionVector mvp = motion_vector_predictor(f);
    MotionField d = f;
    for (auto& v : d.vectors) v = {v.dx - mvp.dx, v.dy - mvp.dy};
    out.differences.push_back(std::move(d));
    out.predictors.push_back(mvp);
  }
  return out;
}

inline std::vector<MotionField> mvd_inverse(const MvdFields& in) {
  if (in.differences.size() != in.predictors.size())
    throw ArityError("mvd_inverse: one predictor per field required");
  std::vector<MotionField> out;
  for (std::size_t i = 0; i < in.differences.size(); ++i) {
    MotionField f = in.differences[i];
    for (auto& v : f.vectors) v = {v.dx + in.predictors[i].dx, v.dy + in.predictors[i].dy};
    out.push_back(std::move(f));
  }
  return out;
}

namespace detail {

inline void check_field(const MotionField& f, const MvGeometry& g) {
  if (f.frame_width != g.width || f.frame_height != g.height || f.block != g.block)
    throw ShapeError("mv payload: field grid does not match geometry");
  for (const auto& v : f.vectors)
    if (std::abs(v.dx) > g.range || std::abs(v.dy) > g.range)
      throw RangeError("motion vector (" + std::to_string(v.dx) + "," +
                       std::to_string(v.dy) + ") exceeds search range " +
                       std::to_string(g.range));
}

inline void put_records(BitWriter& w, const MotionField& f, const MvGeometry& g,
                        MotionVector mvp) {
  const int cbits = g.mvd ? g.difference_bits() : g.component_bits();
  for (int r = 0; r < f.rows; ++r)
    for (int c = 0; c < f.cols; ++c) {
      const MotionVector v = f.at(r, c);
      if (v.zero()) continue;
      const int cx = c * g.block + g.block / 2 + v.dx;
      const int cy = r * g.block + g.block / 2 + v.dy;
      if (cx < 0 || cy < 0 || cx >= (1 << g.x_bits()) || cy >= (1 << g.y_bits()))
        throw RangeError("reference center (" + std::to_string(cx) + "," +
                         std::to_string(cy) + ") outside coordinate range");
      w.put_signed(v.dx - mvp.dx, cbits);
      w.put_signed(v.dy - mvp.dy, cbits);
      w.put(static_cast<std::uint64_t>(cx), g.x_bits());
      w.put(static_cast<std::uint64_t>(cy), g.y_bits());
    }
}

inline void get_records(BitReader& r, std::uint64_t records, MotionField& f,
                        const MvGeometry& g, MotionVector mvp, int frame) {
  const int cbits = g.mvd ? g.difference_bits() : g.component_bits();
  for (std::uint64_t k = 0; k < records; ++k) {
    MotionVector v;
    v.dx = r.get_signed(cbits) + mvp.dx;
    v.dy = r.get_signed(cbits) + mvp.dy;
    const int cx = static_cast<int>(r.get(g.x_bits()));
    const int cy = static_cast<int>(r.get(g.y_bits()));
    const int ox = cx - v.dx - g.block / 2, oy = cy - v.dy - g.block / 2;
    if (ox < 0 || oy < 0 || ox % g.block || oy % g.block || ox / g.block >= f.cols ||
        oy / g.block >= f.rows || v.zero())
      throw FormatError("mv record " + std::to_string(k) + " of frame " +
                        std::to_string(frame) + " does not address a block");
    f.at(oy / g.block, ox / g.block) = v;
  }
}

}  // namespace detail

/// Bits in one motion record: dx, dy, then the reference-block center.
inline int mv_record_bits(const MvGeometry& g) {
  return 2 * (g.mvd ? g.difference_bits() : g.component_bits()) + g.x_bits() + g.y_bits();
}

/// Records of one frame's nonzero vectors (raster order), with no framing:
/// each is dx, dy in sign-magnitude and the center of the reference block
/// the vector points to. Every bit is counted toward the rate.
inline Bits encode_mv_records(const MotionField& f, const MvGeometry& g) {
  detail::check_field(f, g);
  BitWriter w;
  detail::put_records(w, f, g, {});
  return w.take();
}

/// Inverse of encode_mv_records; the record count follows from the length.
inline MotionField decode_mv_records(std::span<const std::uint8_t> bits,
                                     const MvGeometry& g) {
  const auto width = static_cast<std::size_t>(mv_record_bits(g));
  if (bits.size() % width)
    throw TruncationError("mv records: " + std::to_string(bits.size()) +
                          " bits is not a whole number of " + std::to_string(width) +
                          "-bit records");
  MotionField f = MotionField::zeros(g.width, g.height, g.block);
  BitReader r(bits);
  detail::get_records(r, bits.size() / width, f, g, {}, 0);
  return f;
}

/// Serializes a field sequence. Per frame: record count (uncounted), then in
/// MVD mode the predictor, then the frame's records (residual components in
/// MVD mode).
inline MvPayload encode_mv_payload(const std::vector<MotionField>& fields,
                                   const MvGeometry& g) {
  BitWriter w;
  std::size_t uncounted = 0;
  for (const auto& f : fields) {
    detail::check_field(f, g);
    w.put(f.nonzero_count(), g.count_bits());
    uncounted += g.count_bits();
    const MotionVector mvp = g.mvd ? motion_vector_predictor(f) : MotionVector{};
    if (g.mvd) {
      w.put_signed(mvp.dx, g.component_bits());
      w.put_signed(mvp.dy, g.component_bits());
    }
    detail::put_records(w, f, g, mvp);
  }
  MvPayload out;
  out.counted_bits = w.size() - uncounted;
  out.bits = w.take();
  return out;
}

inline std::vector<MotionField> decode_mv_payload(std::span<const std::uint8_t> bits,
                                                  const MvGeometry& g) {
  BitReader r(bits);
  std::vector<MotionField> out;
  for (int t = 0; t < g.frames; ++t) {
    MotionField f = MotionField::zeros(g.width, g.height, g.block);
    const auto records = r.get(g.count_bits());
    MotionVector mvp{};
    if (g.mvd) {
      mvp.dx = r.get_signed(g.component_bits());
      mvp.dy = r.get_signed(g.component_bits());
    }
    detail::get_records(r, records, f, g, mvp, t);
    out.push_back(std::move(f));
  }
  if (r.remaining() != 0)
    throw TruncationError("mv payload: " + std::to_string(r.remaining()) +
                          " dangling bits after " + std::to_string(g.frames) + " frames");
  return out;
}

/// Counted bits of a payload of the given total length: everything except
/// the per-frame record counts.
inline std::size_t mv_counted_bits(std::size_t payload_bits, const MvGeometry& g) {
  return payload_bits - static_cast<std::size_t>(g.frames) * g.count_bits();
}

}  // namespace motionlab::bitstream
