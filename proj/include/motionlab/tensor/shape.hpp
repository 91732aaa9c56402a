#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace motionlab::tensor {

/// (batch, channel, time, height, width).
struct Shape5 {
  std::array<std::int64_t, 5> dims{1, 1, 1, 1, 1};

  constexpr Shape5() = default;
  constexpr Shape5(std::int64_t n, std::int64_t c, std::int64_t t,
                   std::int64_t h, std::int64_t w)
      : dims{n, c, t, h, w} {}

  constexpr std::int64_t n() const { return dims[0]; }
  constexpr std::int64_t c() const { return dims[1]; }
  constexpr std::int64_t t() const { return dims[2]; }
  constexpr std::int64_t h() const { return dims[3]; }
  constexpr std::int64_t w() const { return dims[4]; }
  constexpr std::int64_t operator[](int i) const { return dims[i]; }

  constexpr std::int64_t numel() const {
    return dims[0] * dims[1] * dims[2] * dims[3] * dims[4];
  }
  /// Elements per (batch, channel) volume.
  constexpr std::int64_t volume() const { return dims[2] * dims[3] * dims[4]; }

  friend constexpr bool operator==(const Shape5&, const Shape5&) = default;

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < 5; ++i) {
      s += std::to_string(dims[i]);
      s += i < 4 ? "," : ")";
    }
    return s;
  }
};

inline constexpr Shape5 kScalarShape{1, 1, 1, 1, 1};

}  // namespace motionlab::tensor
