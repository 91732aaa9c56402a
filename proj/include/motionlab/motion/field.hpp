#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionlab/error.hpp"

namespace motionlab::motion {

/// Integer displacement. A target block at x matches the reference at x + v.
struct MotionVector {
  int dx = 0;
  int dy = 0;
  bool zero() const { return dx == 0 && dy == 0; }
  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

/// Per-block motion for one frame transition, stored in raster order.
struct MotionField {
  int frame_width = 0;
  int frame_height = 0;
  int block = 16;
  int cols = 0;
  int rows = 0;
  std::vector<MotionVector> vectors;
  std::vector<double> costs;
  std::vector<int> eval_counts;

  static MotionField zeros(int width, int height, int block) {
    if (width <= 0 || height <= 0 || block <= 0)
      throw SizeError("invalid motion field geometry");
    MotionField f;
    f.frame_width = width;
    f.frame_height = height;
    f.block = block;
    f.cols = (width + block - 1) / block;
    f.rows = (height + block - 1) / block;
    f.vectors.assign(static_cast<std::size_t>(f.cols) * f.rows, {});
    f.costs.assign(f.vectors.size(), 0.0);
    f.eval_counts.assign(f.vectors.size(), 0);
    return f;
  }

  std::size_t size() const { return vectors.size(); }
  MotionVector& at(int row, int col) { return vectors[row * cols + col]; }
  const MotionVector& at(int row, int col) const {
    return vectors[row * cols + col];
  }

  bool same_grid(const MotionField& o) const {
    return frame_width == o.frame_width && frame_height == o.frame_height &&
           block == o.block;
  }

  std::size_t nonzero_count() const {
    std::size_t n = 0;
    for (const auto& v : vectors) n += !v.zero();
    return n;
  }

  double mean_eval_count() const {
    if (eval_counts.empty()) return 0.0;
    double s = 0;
    for (int c : eval_counts) s += c;
    return s / static_cast<double>(eval_counts.size());
  }
};

/// Vector equality only; costs and counts are search diagnostics.
inline bool same_vectors(const MotionField& a, const MotionField& b) {
  return a.same_grid(b) && a.vectors == b.vectors;
}

}  // namespace motionlab::motion
