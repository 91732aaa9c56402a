#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/motion/field.hpp"
#include "motionlab/parallel.hpp"
#include "motionlab/video/frame.hpp"

namespace motionlab::motion {

enum class Algorithm { ES, TSS, NTSS, SES, FSS, DS, ARPS };

inline constexpr std::array<Algorithm, 7> kAllAlgorithms{
    Algorithm::ES,  Algorithm::TSS, Algorithm::NTSS, Algorithm::SES,
    Algorithm::FSS, Algorithm::DS,  Algorithm::ARPS};

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::ES: return "ES";
    case Algorithm::TSS: return "TSS";
    case Algorithm::NTSS: return "NTSS";
    case Algorithm::SES: return "SES";
    case Algorithm::FSS: return "FSS";
    case Algorithm::DS: return "DS";
    case Algorithm::ARPS: return "ARPS";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : kAllAlgorithms)
    if (s == algorithm_name(a)) return a;
  throw ConfigError("unknown block search algorithm '" + s + "'");
}

namespace detail {

/// Luma replicated out to a multiple of the block size.
struct PaddedPlane {
  int width = 0, height = 0;
  std::vector<float> v;

  PaddedPlane(const video::Frame& f, int block) {
    width = (f.width() + block - 1) / block * block;
    height = (f.height() + block - 1) / block * block;
    v.resize(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        v[static_cast<std::size_t>(y) * width + x] =
            f.at(0, std::min(y, f.height() - 1), std::min(x, f.width() - 1));
  }
  const float* row(int y) const { return v.data() + static_cast<std::size_t>(y) * width; }
};

/// Candidate bookkeeping for one block: costs each offset once and keeps
/// the best under the tie-break order (cost, |dx|+|dy|, raster).
class BlockSearcher {
 public:
  BlockSearcher(const PaddedPlane& ref, const PaddedPlane& tgt, int bx, int by,
                int block, int p)
      : ref_(ref), tgt_(tgt), x0_(bx), y0_(by), mb_(block), p_(p),
        seen_((2 * p + 1) * (2 * p + 1), -1.0) {}

  bool valid(int dx, int dy) const {
    if (std::abs(dx) > p_ || std::abs(dy) > p_) return false;
    const int x = x0_ + dx, y = y0_ + dy;
    return x >= 0 && y >= 0 && x + mb_ <= ref_.width && y + mb_ <= ref_.height;
  }

  /// Cost of an offset, or a negative value if it is not a valid candidate.
  double eval(int dx, int dy) {
    if (!valid(dx, dy)) return -1.0;
    double& slot = seen_[(dy + p_) * (2 * p_ + 1) + (dx + p_)];
    if (slot >= 0) return slot;
    double sad = 0;
    for (int r = 0; r < mb_; ++r) {
      const float* a = tgt_.row(y0_ + r) + x0_;
      const float* b = ref_.row(y0_ + dy + r) + x0_ + dx;
      float acc = 0;
      for (int c = 0; c < mb_; ++c) acc += std::abs(a[c] - b[c]);
      sad += acc;
    }
    slot = sad;
    ++count_;
    consider(dx, dy, sad);
    return sad;
  }

  /// Evaluates offsets relative to a center and returns the best of them
  /// (center included) under the tie-break order.
  template <class Offsets>
  MotionVector step(MotionVector center, const Offsets& offsets) {
    MotionVector best = center;
    double best_cost = eval(center.dx, center.dy);
    for (const auto& o : offsets) {
      const MotionVector c{center.dx + o[0], center.dy + o[1]};
      const double cost = eval(c.dx, c.dy);
      if (cost < 0) continue;
      if (best_cost < 0 || better(c, cost, best, best_cost)) {
        best = c;
        best_cost = cost;
      }
    }
    return best;
  }

  double cost_of(MotionVector v) { return eval(v.dx, v.dy); }
  MotionVector best() const { return best_; }
  double best_cost() const { return best_cost_; }
  int count() const { return count_; }

  static bool better(MotionVector a, double ca, MotionVector b, double cb) {
    if (ca != cb) return ca < cb;
    const int ma = std::abs(a.dx) + std::abs(a.dy), mb = std::abs(b.dx) + std::abs(b.dy);
    if (ma != mb) return ma < mb;
    if (a.dy != b.dy) return a.dy < b.dy;
    return a.dx < b.dx;
  }

 private:
  void consider(int dx, int dy, double cost) {
    const MotionVector v{dx, dy};
    if (best_cost_ < 0 || better(v, cost, best_, best_cost_)) {
      best_ = v;
      best_cost_ = cost;
    }
  }

  const PaddedPlane& ref_;
  const PaddedPlane& tgt_;
  int x0_, y0_, mb_, p_;
  std::vector<double> seen_;
  int count_ = 0;
  MotionVector best_{};
  double best_cost_ = -1.0;
};

using Offset = std::array<int, 2>;

inline std::vector<Offset> square(int s) {
  return {{-s, -s}, {0, -s}, {s, -s}, {-s, 0}, {s, 0}, {-s, s}, {0, s}, {s, s}};
}

inline const std::vector<Offset>& large_diamond() {
  static const std::vector<Offset> k{{0, -2}, {-1, -1}, {1, -1}, {-2, 0},
                                     {2, 0},  {-1, 1},  {1, 1},  {0, 2}};
  return k;
}

inline const std::vector<Offset>& small_diamond() {
  static const std::vector<Offset> k{{0, -1}, {-1, 0}, {1, 0}, {0, 1}};
  return k;
}

inline void exhaustive(BlockSearcher& s, int p) {
  for (int dy = -p; dy <= p; ++dy)
    for (int dx = -p; dx <= p; ++dx) s.eval(dx, dy);
}

inline void three_step(BlockSearcher& s, MotionVector c, int step) {
  for (; step >= 1; step /= 2) c = s.step(c, square(step));
}

inline void new_three_step(BlockSearcher& s, int step) {
  const MotionVector origin{};
  s.step(origin, square(1));
  s.step(origin, square(step));
  const MotionVector b = s.best();
  if (b.zero()) return;
  if (std::abs(b.dx) <= 1 && std::abs(b.dy) <= 1) {
    s.step(b, square(1));
    return;
  }
  three_step(s, b, step / 2);
}

inline void simple_efficient(BlockSearcher& s, int step) {
  MotionVector c{};
  for (; step >= 1; step /= 2) {
    const double a = s.cost_of(c);
    const double right = s.cost_of({c.dx + step, c.dy});
    const double down = s.cost_of({c.dx, c.dy + step});
    // The two probes pick the quadrant; an invalid probe loses to the center.
    const int hx = (right >= 0 && a >= right) ? 1 : -1;
    const int hy = (down >= 0 && a >= down) ? 1 : -1;
    const std::vector<Offset> pattern{{step, 0},       {0, step},
                                      {hx * step, 0},  {0, hy * step},
                                      {hx * step, hy * step}};
    c = s.step(c, pattern);
  }
}

inline void four_step(BlockSearcher& s) {
  MotionVector c{};
  for (int i = 0; i < 3; ++i) {
    const MotionVector next = s.step(c, square(2));
    if (next == c) break;
    c = next;
  }
  s.step(c, square(1));
}

inline void diamond(BlockSearcher& s, int p) {
  MotionVector c{};
  for (int i = 0; i <= 2 * p; ++i) {
    const MotionVector next = s.step(c, large_diamond());
    if (next == c) break;
    c = next;
  }
  s.step(c, small_diamond());
}

inline void adaptive_rood(BlockSearcher& s, MotionVector predicted, bool has_left,
                          int p, double zero_threshold) {
  const double zero_cost = s.cost_of({0, 0});
  if (zero_cost >= 0 && zero_cost < zero_threshold) return;
  const int arm = has_left ? std::max(std::abs(predicted.dx), std::abs(predicted.dy)) : 2;
  MotionVector c{};
  if (arm > 0) {
    const std::vector<Offset> rood{{0, -arm}, {-arm, 0}, {arm, 0}, {0, arm}};
    s.step(c, rood);
  }
  if (has_left && !predicted.zero()) s.cost_of(predicted);
  c = s.best();
  for (int i = 0; i <= 4 * p; ++i) {
    const MotionVector next = s.step(c, small_diamond());
    if (next == c) break;
    c = next;
  }
}

}  // namespace detail

/// Block-matching motion estimation of `target` against `reference` with
/// SAD on luma. Frames are padded by replication to block multiples; a
/// candidate is valid when its displaced block lies in the padded frame.
inline MotionField block_search(const video::Frame& reference,
                                const video::Frame& target, Algorithm algo,
                                int block, int p) {
  if (!reference.same_geometry(target))
    throw ShapeError("block_search: reference and target geometry differ");
  if (block < 1 || block > reference.width() || block > reference.height())
    throw SizeError("block size " + std::to_string(block) + " does not fit " +
                    std::to_string(reference.width()) + "x" +
                    std::to_string(reference.height()));
  if (p < 1) throw ConfigError("search range must be >= 1");
  const detail::PaddedPlane ref(reference, block), tgt(target, block);
  MotionField field = MotionField::zeros(reference.width(), reference.height(), block);
  int step = 1;
  while (step * 2 <= p) step *= 2;
  const double zero_threshold =
      2.0 * block * block * (reference.normalized() ? 1.0 / 127.5 : 1.0);

  // Rows are independent (ARPS only looks left), so they are the unit of work.
  parallel_for(static_cast<std::size_t>(field.rows), [&](std::size_t row) {
    const int r = static_cast<int>(row);
    for (int c = 0; c < field.cols; ++c) {
      detail::BlockSearcher s(ref, tgt, c * block, r * block, block, p);
      switch (algo) {
        case Algorithm::ES: detail::exhaustive(s, p); break;
        case Algorithm::TSS: detail::three_step(s, {}, step); break;
        case Algorithm::NTSS: detail::new_three_step(s, step); break;
        case Algorithm::SES: detail::simple_efficient(s, step); break;
        case Algorithm::FSS: detail::four_step(s); break;
        case Algorithm::DS: detail::diamond(s, p); break;
        case Algorithm::ARPS:
          detail::adaptive_rood(s, c > 0 ? field.at(r, c - 1) : MotionVector{},
                                c > 0, p, zero_threshold);
          break;
      }
      const std::size_t i = static_cast<std::size_t>(r) * field.cols + c;
      field.vectors[i] = s.best();
      field.costs[i] = s.best_cost();
      field.eval_counts[i] = s.count();
    }
  });
  return field;
}

/// Predicts a frame by copying each block from its displaced reference
/// position; reads outside the frame clamp to the nearest edge sample.
inline video::Frame motion_compensate(const video::Frame& reference,
                                      const MotionField& field) {
  if (field.frame_width != reference.width() || field.frame_height != reference.height())
    throw ShapeError("motion_compensate: field geometry does not match frame");
  video::Frame out = reference;
  const int W = reference.width(), H = reference.height();
  for (int ch = 0; ch < reference.channels(); ++ch)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const MotionVector v = field.at(y / field.block, x / field.block);
        out.at(ch, y, x) = reference.at(ch, std::clamp(y + v.dy, 0, H - 1),
                                        std::clamp(x + v.dx, 0, W - 1));
      }
  return out;
}

/// Fine 4x4-block exhaustive field from prev to next, used as a flow proxy.
inline MotionField dense_flow(const video::Frame& prev, const video::Frame& next, int p) {
  return block_search(prev, next, Algorithm::ES, 4, p);
}

}  // namespace motionlab::motion
