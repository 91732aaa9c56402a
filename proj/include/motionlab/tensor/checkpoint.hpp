#pragma once

// Checkpoint layout (all integers little-endian uint32):
//   "MLAB" | version | entry count |
//   per entry: name length | name bytes | rank | dims... | float32 values

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/tensor/params.hpp"

namespace motionlab::tensor {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4)
    throw TruncationError(std::string("checkpoint truncated reading ") + what);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path,
                            const std::vector<CheckpointEntry>& entries) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot create checkpoint " + tmp.string());
    out.write("MLAB", 4);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
      detail::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
      out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      detail::put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
      std::size_t count = 1;
      for (auto d : e.dims) {
        detail::put_u32(out, d);
        count *= d;
      }
      if (count != e.values.size())
        throw ShapeError("checkpoint entry '" + e.name + "' dims disagree with values");
      for (float v : e.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<CheckpointEntry> load_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "MLAB", 4) != 0)
    throw FormatError("bad checkpoint magic in " + path.string());
  const auto version = detail::get_u32(in, "version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = detail::get_u32(in, "entry count");
  std::vector<CheckpointEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto len = detail::get_u32(in, "name length");
    if (len > 4096) throw FormatError("implausible checkpoint name length");
    e.name.resize(len);
    in.read(e.name.data(), len);
    if (static_cast<std::uint32_t>(in.gcount()) != len)
      throw TruncationError("checkpoint truncated in name");
    const auto rank = detail::get_u32(in, "rank");
    if (rank > 8) throw FormatError("implausible checkpoint rank");
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      e.dims.push_back(detail::get_u32(in, "dims"));
      n *= e.dims.back();
    }
    e.values.resize(n);
    for (auto& v : e.values) v = std::bit_cast<float>(detail::get_u32(in, "values"));
    entries.push_back(std::move(e));
  }
  return entries;
}

template <class T>
std::vector<CheckpointEntry> to_entries(const ParamSet<T>& params) {
  std::vector<CheckpointEntry> out;
  for (const auto& [name, t] : params) {
    CheckpointEntry e{name, {}, {}};
    for (auto d : t.shape().dims) e.dims.push_back(static_cast<std::uint32_t>(d));
    e.values.assign(t.values().begin(), t.values().end());
    out.push_back(std::move(e));
  }
  return out;
}

/// Rank-5 entries become parameters; other ranks are skipped (metadata).
template <class T>
ParamSet<T> from_entries(const std::vector<CheckpointEntry>& entries) {
  ParamSet<T> out;
  for (const auto& e : entries) {
    if (e.dims.size() != 5) continue;
    Shape5 s{e.dims[0], e.dims[1], e.dims[2], e.dims[3], e.dims[4]};
    out.add(e.name, Tensor<T>::from(s, std::vector<T>(e.values.begin(), e.values.end())));
  }
  return out;
}

}  // namespace motionlab::tensor
