#pragma once

// Container layout (little-endian):
//   "DMC1" | kind u8 | width u16 | height u16 | reference frames u8 |
//   referencing frames u8 | kind params | payload bit length u32 | payload
// Kind params: learned codecs carry C_bnd u8 and L u8 (L = 0 means no bit
// assignment); the block codec carries algorithm u8 (bit 7 set in MVD
// mode), block size u8 and search range u8. The payload is MSB-first with
// the final byte zero padded. A .dmc file is a concatenation of containers.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "motionlab/bitstream/bits.hpp"
#include "motionlab/bitstream/mv_payload.hpp"
#include "motionlab/error.hpp"

namespace motionlab::bitstream {

enum class CodecKind : std::uint8_t { LearnedP = 0, LearnedB = 1, Block = 2 };

inline constexpr std::array<char, 4> kContainerMagic{'D', 'M', 'C', '1'};

struct CodedGop {
  CodecKind kind = CodecKind::LearnedP;
  int width = 0;
  int height = 0;
  int reference_frames = 1;
  int referencing_frames = 0;
  int c_bnd = 0;
  int levels = 0;
  int algorithm = 0;
  bool mvd = false;
  int block = 0;
  int range = 0;
  Bits payload;

  bool learned() const { return kind != CodecKind::Block; }

  MvGeometry mv_geometry() const {
    return {width, height, block, range, referencing_frames, mvd};
  }

  /// Bits charged to the rate: the whole learned payload (importance prefix
  /// and masked code), or the block payload without record-count fields.
  std::size_t counted_bits() const {
    return learned() ? payload.size() : mv_counted_bits(payload.size(), mv_geometry());
  }

  std::size_t header_bytes() const { return learned() ? 17 : 18; }

  friend bool operator==(const CodedGop&, const CodedGop&) = default;
};

/// Counted bits per predicted pixel.
inline double bits_per_pixel(const CodedGop& g) {
  const double pixels = static_cast<double>(g.referencing_frames) * g.width * g.height;
  return pixels > 0 ? static_cast<double>(g.counted_bits()) / pixels : 0.0;
}

namespace detail {

inline void put_u8(std::vector<std::uint8_t>& out, int v, const char* what) {
  if (v < 0 || v > 255) throw RangeError(std::string(what) + " " + std::to_string(v) + " exceeds one byte");
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u16(std::vector<std::uint8_t>& out, int v, const char* what) {
  if (v < 0 || v > 65535) throw RangeError(std::string(what) + " " + std::to_string(v) + " exceeds two bytes");
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint32_t get(int bytes, const char* what) {
    if (pos_ + bytes > b_.size())
      throw TruncationError(std::string("container: truncated ") + what);
    std::uint32_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += bytes;
    return v;
  }
  std::span<const std::uint8_t> rest() const { return b_.subspan(pos_); }
  void skip(std::size_t n) { pos_ += n; }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_container(const CodedGop& g) {
  std::vector<std::uint8_t> out(kContainerMagic.begin(), kContainerMagic.end());
  out.push_back(static_cast<std::uint8_t>(g.kind));
  detail::put_u16(out, g.width, "width");
  detail::put_u16(out, g.height, "height");
  detail::put_u8(out, g.reference_frames, "reference frame count");
  detail::put_u8(out, g.referencing_frames, "referencing frame count");
  if (g.learned()) {
    detail::put_u8(out, g.c_bnd, "C_bnd");
    detail::put_u8(out, g.levels, "levels");
  } else {
    detail::put_u8(out, g.algorithm, "algorithm");
    if (g.mvd) out.back() |= 0x80;
    detail::put_u8(out, g.block, "block size");
    detail::put_u8(out, g.range, "search range");
  }
  const auto n = static_cast<std::uint64_t>(g.payload.size());
  if (n > 0xffffffffu) throw RangeError("payload too long for container");
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  const auto bytes = pack_bytes(g.payload);
  out.insert(out.end(), bytes.begin(), bytes.end());
  return out;
}

/// Decodes one container from the front of `bytes`; `consumed` receives its
/// length so concatenated containers can be walked.
inline CodedGop decode_container(std::span<const std::uint8_t> bytes,
                                 std::size_t* consumed = nullptr) {
  if (bytes.size() < 4 || !std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin()))
    throw FormatError("container: bad magic");
  detail::ByteCursor cur(bytes);
  cur.skip(4);
  CodedGop g;
  const auto kind = cur.get(1, "kind");
  if (kind > 2) throw FormatError("container: unknown codec kind " + std::to_string(kind));
  g.kind = static_cast<CodecKind>(kind);
  g.width = static_cast<int>(cur.get(2, "width"));
  g.height = static_cast<int>(cur.get(2, "height"));
  g.reference_frames = static_cast<int>(cur.get(1, "frame counts"));
  g.referencing_frames = static_cast<int>(cur.get(1, "frame counts"));
  if (g.learned()) {
    g.c_bnd = static_cast<int>(cur.get(1, "C_bnd"));
    g.levels = static_cast<int>(cur.get(1, "levels"));
  } else {
    const auto a = cur.get(1, "algorithm");
    g.algorithm = static_cast<int>(a & 0x7f);
    g.mvd = (a & 0x80) != 0;
    g.block = static_cast<int>(cur.get(1, "block size"));
    g.range = static_cast<int>(cur.get(1, "search range"));
  }
  const std::size_t nbits = cur.get(4, "payload length");
  const std::size_t nbytes = (nbits + 7) / 8;
  if (cur.rest().size() < nbytes)
    throw TruncationError("container: payload declares " + std::to_string(nbits) + " bits, " +
                          std::to_string(cur.rest().size() * 8) + " available");
  g.payload = unpack_bytes(cur.rest().first(nbytes), nbits);
  cur.skip(nbytes);
  if (consumed) *consumed = cur.position();
  return g;
}

inline std::vector<CodedGop> decode_stream(std::span<const std::uint8_t> bytes) {
  std::vector<CodedGop> out;
  while (!bytes.empty()) {
    std::size_t used = 0;
    out.push_back(decode_container(bytes, &used));
    bytes = bytes.subspan(used);
  }
  return out;
}

inline void write_dmc(const std::filesystem::path& path, const std::vector<CodedGop>& gops) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot create " + tmp.string());
    for (const auto& g : gops) {
      const auto bytes = encode_container(g);
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<CodedGop> read_dmc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  return decode_stream(bytes);
}

}  // namespace motionlab::bitstream
