#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/video/frame.hpp"
#include "motionlab/video/gop.hpp"

namespace motionlab::video {

enum class Chroma { C420, C444 };

/// Decoded YUV4MPEG2 stream. header_tags keeps every stream tag except W and
/// H, in order, so a rewrite reproduces the original header.
struct Y4mVideo {
  int width = 0;
  int height = 0;
  Chroma chroma = Chroma::C420;
  std::string chroma_tag;
  std::vector<std::string> header_tags;
  std::vector<Frame> frames;
};

namespace detail {

inline Chroma parse_chroma(const std::string& tag) {
  if (tag == "C444") return Chroma::C444;
  if (tag == "C420" || tag == "C420jpeg" || tag == "C420paldv" ||
      tag == "C420mpeg2")
    return Chroma::C420;
  throw FormatError("unsupported y4m chroma tag '" + tag + "'");
}

inline int chroma_w(int w, Chroma c) { return c == Chroma::C444 ? w : (w + 1) / 2; }
inline int chroma_h(int h, Chroma c) { return c == Chroma::C444 ? h : (h + 1) / 2; }

inline std::size_t frame_bytes(int w, int h, Chroma c) {
  return static_cast<std::size_t>(w) * h +
         2 * static_cast<std::size_t>(chroma_w(w, c)) * chroma_h(h, c);
}

/// Planar Y, U, V bytes -> full-resolution 3-channel frame (nearest-neighbour
/// chroma upsampling for 4:2:0).
inline Frame planes_to_frame(const std::uint8_t* buf, int w, int h, Chroma c) {
  Frame f(w, h, 3);
  const int cw = chroma_w(w, c), ch = chroma_h(h, c);
  const std::uint8_t* y_plane = buf;
  const std::uint8_t* u_plane = y_plane + static_cast<std::size_t>(w) * h;
  const std::uint8_t* v_plane = u_plane + static_cast<std::size_t>(cw) * ch;
  const int sub = c == Chroma::C444 ? 1 : 2;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.at(0, y, x) = y_plane[y * w + x];
      f.at(1, y, x) = u_plane[(y / sub) * cw + x / sub];
      f.at(2, y, x) = v_plane[(y / sub) * cw + x / sub];
    }
  return f;
}

/// Inverse of planes_to_frame; 4:2:0 keeps the top-left sample of each 2x2.
inline void frame_to_planes(const Frame& f, Chroma c,
                            std::vector<std::uint8_t>& out) {
  if (f.channels() != 3 || f.normalized())
    throw ShapeError("y4m output expects 3-channel 8-bit frames");
  const int w = f.width(), h = f.height();
  const int cw = chroma_w(w, c), ch = chroma_h(h, c);
  const int sub = c == Chroma::C444 ? 1 : 2;
  auto byte = [](float v) {
    return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0f, 255.0f));
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.push_back(byte(f.at(0, y, x)));
  for (int plane = 1; plane <= 2; ++plane)
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x)
        out.push_back(byte(f.at(plane, y * sub, x * sub)));
}

inline std::vector<std::string> split_tags(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

/// Reads every frame of a YUV4MPEG2 file.
inline Y4mVideo read_y4m(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open y4m file " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw FormatError("empty y4m file " + path.string());
  auto tags = detail::split_tags(header);
  if (tags.empty() || tags.front() != "YUV4MPEG2")
    throw FormatError("missing YUV4MPEG2 signature in " + path.string());
  Y4mVideo video;
  for (std::size_t i = 1; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    try {
      if (t[0] == 'W') {
        video.width = std::stoi(t.substr(1));
        continue;
      }
      if (t[0] == 'H') {
        video.height = std::stoi(t.substr(1));
        continue;
      }
    } catch (const std::exception&) {
      throw FormatError("bad y4m dimension tag '" + t + "'");
    }
    if (t[0] == 'C') {
      video.chroma = detail::parse_chroma(t);
      video.chroma_tag = t;
    }
    video.header_tags.push_back(t);
  }
  if (video.width <= 0 || video.height <= 0)
    throw FormatError("y4m header lacks positive W/H");

  const std::size_t bytes =
      detail::frame_bytes(video.width, video.height, video.chroma);
  std::vector<std::uint8_t> buf(bytes);
  std::string line;
  for (int index = 0;; ++index) {
    if (!std::getline(in, line)) break;
    if (line.rfind("FRAME", 0) != 0)
      throw TruncationError("frame " + std::to_string(index) +
                            ": missing FRAME marker");
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes)
      throw TruncationError("frame " + std::to_string(index) + ": expected " +
                            std::to_string(bytes) + " bytes, got " +
                            std::to_string(in.gcount()));
    video.frames.push_back(detail::planes_to_frame(buf.data(), video.width,
                                                   video.height, video.chroma));
  }
  return video;
}

/// Writes frames as YUV4MPEG2. Extra header tags default to 25 fps
/// progressive.
inline void write_y4m(const std::filesystem::path& path,
                      const std::vector<Frame>& frames, Chroma chroma,
                      std::vector<std::string> header_tags = {"F25:1", "Ip",
                                                              "A1:1"},
                      std::string chroma_tag = {}) {
  if (frames.empty()) throw SizeError("cannot write an empty y4m file");
  const int w = frames.front().width(), h = frames.front().height();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create y4m file " + path.string());
  out << "YUV4MPEG2 W" << w << " H" << h;
  bool has_chroma_tag = false;
  for (const auto& t : header_tags) {
    out << ' ' << t;
    has_chroma_tag = has_chroma_tag || t[0] == 'C';
  }
  if (chroma_tag.empty())
    chroma_tag = chroma == Chroma::C444 ? "C444" : "C420jpeg";
  if (!has_chroma_tag) out << ' ' << chroma_tag;
  out << '\n';
  std::vector<std::uint8_t> buf;
  for (const auto& f : frames) {
    if (f.width() != w || f.height() != h)
      throw ShapeError("y4m frames must share geometry");
    buf.clear();
    detail::frame_to_planes(f, chroma, buf);
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

inline void write_y4m(const std::filesystem::path& path, const Y4mVideo& v) {
  write_y4m(path, v.frames, v.chroma, v.header_tags, v.chroma_tag);
}

/// Loads a y4m file as a GOP (frames as 8-bit, 3-channel YUV).
inline GopClip load_y4m(const std::filesystem::path& path,
                        GopKind kind = GopKind::P) {
  return structure_gop(read_y4m(path).frames, kind);
}

inline void save_y4m(const std::filesystem::path& path, const GopClip& clip,
                     Chroma chroma = Chroma::C444) {
  write_y4m(path, clip.frames, chroma);
}

/// Raw planar 4:2:0 (.yuv) reader; geometry and count come from the caller.
inline std::vector<Frame> read_raw_yuv420(const std::filesystem::path& path,
                                          int width, int height,
                                          int frame_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open raw yuv file " + path.string());
  const std::size_t bytes = detail::frame_bytes(width, height, Chroma::C420);
  std::vector<std::uint8_t> buf(bytes);
  std::vector<Frame> frames;
  for (int i = 0; i < frame_count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes)
      throw TruncationError("frame " + std::to_string(i) + ": expected " +
                            std::to_string(bytes) + " bytes, got " +
                            std::to_string(in.gcount()));
    frames.push_back(
        detail::planes_to_frame(buf.data(), width, height, Chroma::C420));
  }
  return frames;
}

inline void write_raw_yuv420(const std::filesystem::path& path,
                             const std::vector<Frame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create raw yuv file " + path.string());
  std::vector<std::uint8_t> buf;
  for (const auto& f : frames) {
    buf.clear();
    detail::frame_to_planes(f, Chroma::C420, buf);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
}

}  // namespace motionlab::video
