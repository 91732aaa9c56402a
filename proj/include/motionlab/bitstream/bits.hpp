#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "motionlab/error.hpp"

namespace motionlab::bitstream {

/// One bit per element (0 or 1), in transmission order.
using Bits = std::vector<std::uint8_t>;

/// Smallest k with 2^k >= n; 0 for n <= 1.
constexpr int ceil_log2(std::uint64_t n) {
  int k = 0;
  while ((std::uint64_t{1} << k) < n) ++k;
  return k;
}

class BitWriter {
 public:
  /// Appends the low `width` bits of value, most significant first.
  void put(std::uint64_t value, int width) {
    if (width < 64 && (value >> width) != 0)
      throw RangeError("value " + std::to_string(value) + " does not fit in " +
                       std::to_string(width) + " bits");
    for (int i = width - 1; i >= 0; --i) bits_.push_back((value >> i) & 1u);
  }

  /// Sign-magnitude: one sign bit (1 = negative) then |v| in width - 1 bits.
  void put_signed(int v, int width) {
    put(v < 0 ? 1 : 0, 1);
    put(static_cast<std::uint64_t>(v < 0 ? -v : v), width - 1);
  }

  void put_bit(bool b) { bits_.push_back(b ? 1 : 0); }
  void append(std::span<const std::uint8_t> bits) { bits_.insert(bits_.end(), bits.begin(), bits.end()); }

  std::size_t size() const { return bits_.size(); }
  const Bits& bits() const { return bits_; }
  Bits take() { return std::move(bits_); }

 private:
  Bits bits_;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bits) : bits_(bits) {}

  std::uint64_t get(int width) {
    if (remaining() < static_cast<std::size_t>(width))
      throw TruncationError("bitstream: needed " + std::to_string(width) +
                            " bits at offset " + std::to_string(pos_) + ", " +
                            std::to_string(remaining()) + " remain");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 1) | bits_[pos_++];
    return v;
  }

  int get_signed(int width) {
    const bool negative = get(1) != 0;
    const int mag = static_cast<int>(get(width - 1));
    return negative ? -mag : mag;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bits_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bits_;
  std::size_t pos_ = 0;
};

/// Packs bits MSB-first; the final byte is zero padded.
inline std::vector<std::uint8_t> pack_bytes(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return out;
}

inline Bits unpack_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
  if (bit_count > bytes.size() * 8)
    throw TruncationError("bitstream: " + std::to_string(bit_count) + " bits declared, " +
                          std::to_string(bytes.size() * 8) + " available");
  Bits out(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
  return out;
}

}  // namespace motionlab::bitstream
