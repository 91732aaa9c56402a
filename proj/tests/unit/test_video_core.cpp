#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <gtest/gtest.h>

#include "motionlab/video/gop.hpp"
#include "motionlab/video/y4m.hpp"

namespace fs = std::filesystem;
namespace ml = motionlab;
using ml::video::Frame;
using ml::video::FrameRole;
using ml::video::GopKind;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("motionlab_vc_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<Frame> gradient_frames(int n, int w, int h) {
  std::vector<Frame> frames;
  for (int t = 0; t < n; ++t) {
    Frame f(w, h, 3);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.at(c, y, x) = static_cast<float>((x * 7 + y * 13 + t * 5 + c * 50) % 256);
    frames.push_back(f);
  }
  return frames;
}

}  // namespace

TEST(Y4m, ConstantFourByFour444) {
  TempDir dir;
  std::string file = "YUV4MPEG2 W4 H4 F25:1 Ip A1:1 C444\n";
  for (int i = 0; i < 2; ++i) file += "FRAME\n" + std::string(48, static_cast<char>(128));
  write_bytes(dir / "c.y4m", file);
  auto clip = ml::video::load_y4m(dir / "c.y4m");
  ASSERT_EQ(clip.size(), 2);
  for (const auto& f : clip.frames) {
    EXPECT_EQ(f.width(), 4);
    EXPECT_EQ(f.channels(), 3);
    for (float v : f.data()) EXPECT_EQ(v, 128.0f);
  }
}

TEST(Y4m, HandWritten420Fixture) {
  TempDir dir;
  std::string file = "YUV4MPEG2 W16 H8 F25:1 C420\n";
  const std::size_t bytes = 16 * 8 * 3 / 2;
  ASSERT_EQ(bytes, 192u);
  for (int i = 0; i < 3; ++i) {
    std::string payload(bytes, '\0');
    for (std::size_t k = 0; k < bytes; ++k) payload[k] = static_cast<char>((k + i) % 251);
    file += "FRAME\n" + payload;
  }
  write_bytes(dir / "f.y4m", file);
  auto clip = ml::video::load_y4m(dir / "f.y4m");
  ASSERT_EQ(clip.size(), 3);
  EXPECT_EQ(clip.width(), 16);
  EXPECT_EQ(clip.height(), 8);
  EXPECT_EQ(clip.channels(), 3);
  // U plane starts at byte 128; chroma sample (0,0) covers the top-left 2x2.
  const auto& f1 = clip.frames[1];
  EXPECT_EQ(f1.at(0, 0, 0), 1.0f);
  EXPECT_EQ(f1.at(1, 0, 0), 129.0f);
  EXPECT_EQ(f1.at(1, 1, 1), 129.0f);
  EXPECT_EQ(f1.at(1, 0, 2), 130.0f);
  EXPECT_EQ(f1.at(2, 2, 0), 128.0f + 32.0f + 8.0f + 1.0f);
}

TEST(Y4m, MissingFrameMarkerIsTruncation) {
  TempDir dir;
  std::string file = "YUV4MPEG2 W4 H4 C444\nFRAME\n" + std::string(48, 'a') + std::string(48, 'b');
  write_bytes(dir / "m.y4m", file);
  try {
    ml::video::load_y4m(dir / "m.y4m");
    FAIL();
  } catch (const ml::TruncationError& e) {
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
  }
}

TEST(Y4m, ShortPayloadIsTruncation) {
  TempDir dir;
  write_bytes(dir / "s.y4m", "YUV4MPEG2 W4 H4 C444\nFRAME\n" + std::string(20, 'a'));
  EXPECT_THROW(ml::video::load_y4m(dir / "s.y4m"), ml::TruncationError);
}

TEST(Y4m, MalformedHeaderIsFormatError) {
  TempDir dir;
  write_bytes(dir / "h.y4m", "YUV4MPEG W4 H4\nFRAME\n");
  EXPECT_THROW(ml::video::load_y4m(dir / "h.y4m"), ml::FormatError);
  write_bytes(dir / "h2.y4m", "YUV4MPEG2 W4 C444\nFRAME\n");
  EXPECT_THROW(ml::video::load_y4m(dir / "h2.y4m"), ml::FormatError);
  write_bytes(dir / "h3.y4m", "YUV4MPEG2 W4 H4 C422\nFRAME\n");
  EXPECT_THROW(ml::video::load_y4m(dir / "h3.y4m"), ml::FormatError);
}

TEST(Y4m, RoundTrip444IsByteIdentical) {
  TempDir dir;
  std::string file = "YUV4MPEG2 W6 H4 F30000:1001 Ip A1:1 C444 XYSCSS=444\n";
  for (int i = 0; i < 3; ++i) {
    std::string payload(72, '\0');
    for (int k = 0; k < 72; ++k) payload[k] = static_cast<char>((k * 37 + i * 11) % 256);
    file += "FRAME\n" + payload;
  }
  write_bytes(dir / "in.y4m", file);
  auto video = ml::video::read_y4m(dir / "in.y4m");
  ml::video::write_y4m(dir / "out.y4m", video);
  EXPECT_EQ(read_bytes(dir / "out.y4m"), file);

  auto clip = ml::video::structure_gop(gradient_frames(3, 8, 6), GopKind::P);
  ml::video::save_y4m(dir / "g.y4m", clip);
  auto back = ml::video::load_y4m(dir / "g.y4m");
  ml::video::save_y4m(dir / "g2.y4m", back);
  EXPECT_EQ(back.frames, clip.frames);
  EXPECT_EQ(read_bytes(dir / "g.y4m"), read_bytes(dir / "g2.y4m"));
}

TEST(RawYuv, RoundTripAndTruncation) {
  TempDir dir;
  auto frames = gradient_frames(2, 8, 4);
  for (auto& f : frames)  // 4:2:0 keeps only one chroma sample per 2x2 block
    for (int c = 1; c < 3; ++c)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) f.at(c, y, x) = f.at(c, y / 2 * 2, x / 2 * 2);
  ml::video::write_raw_yuv420(dir / "a.yuv", frames);
  EXPECT_EQ(fs::file_size(dir / "a.yuv"), 2u * 48u);
  EXPECT_EQ(ml::video::read_raw_yuv420(dir / "a.yuv", 8, 4, 2), frames);
  EXPECT_THROW(ml::video::read_raw_yuv420(dir / "a.yuv", 8, 4, 3), ml::TruncationError);
}

TEST(Normalize, EndpointsAndMidpoint) {
  Frame f(3, 1, 1, {0.0f, 255.0f, 128.0f});
  auto n = ml::video::normalize_frame(f);
  EXPECT_FLOAT_EQ(n.at(0, 0, 0), -1.0f);
  EXPECT_FLOAT_EQ(n.at(0, 0, 1), 1.0f);
  EXPECT_FLOAT_EQ(n.at(0, 0, 2), static_cast<float>(128.0 / 127.5 - 1.0));
  EXPECT_NEAR(n.at(0, 0, 2), 0.00392, 1e-5);
  EXPECT_THROW(ml::video::normalize_frame(n), ml::StateError);
}

TEST(Normalize, InverseIsExactOnAllByteValues) {
  std::vector<float> v(256);
  for (int i = 0; i < 256; ++i) v[i] = static_cast<float>(i);
  Frame f(256, 1, 1, v);
  auto clip = ml::video::structure_gop({f, f}, GopKind::P);
  auto back = ml::video::denormalize(ml::video::normalize(clip));
  EXPECT_EQ(back.frames, clip.frames);
}

TEST(Normalize, DenormalizeRoundsAndClamps) {
  Frame f(2, 1, 1, {-1.0f, 1.0f}, ml::video::SampleDomain::Normalized);
  auto d = ml::video::denormalize_frame(f);
  EXPECT_EQ(d.at(0, 0, 0), 0.0f);
  EXPECT_EQ(d.at(0, 0, 1), 255.0f);
  EXPECT_THROW(Frame(1, 1, 1, {1.5f}, ml::video::SampleDomain::Normalized), ml::DomainError);
}

TEST(Frame, LengthInvariant) {
  EXPECT_THROW(Frame(2, 2, 3, std::vector<float>(11)), ml::ShapeError);
  EXPECT_THROW(Frame(2, 2, 2), ml::ShapeError);
}

TEST(StructureGop, SeventeenP) {
  auto clip = ml::video::structure_gop(gradient_frames(17, 4, 4), GopKind::P);
  EXPECT_EQ(clip.roles.front(), FrameRole::I);
  for (int i = 1; i < 17; ++i) EXPECT_EQ(clip.roles[i], FrameRole::P);
  EXPECT_EQ(clip.referencing_indices().size(), 16u);
}

TEST(StructureGop, EighteenB) {
  auto clip = ml::video::structure_gop(gradient_frames(18, 4, 4), GopKind::B);
  EXPECT_EQ(clip.roles.front(), FrameRole::I);
  EXPECT_EQ(clip.roles.back(), FrameRole::I);
  for (int i = 1; i < 17; ++i) EXPECT_EQ(clip.roles[i], FrameRole::B);
  EXPECT_EQ(clip.referencing_indices().size(), 16u);
  EXPECT_EQ(clip.reference_indices(), (std::vector<int>{0, 17}));
}

TEST(StructureGop, TooFewFrames) {
  EXPECT_THROW(ml::video::structure_gop(gradient_frames(2, 4, 4), GopKind::B), ml::SizeError);
  EXPECT_THROW(ml::video::structure_gop(gradient_frames(1, 4, 4), GopKind::P), ml::SizeError);
  EXPECT_NO_THROW(ml::video::structure_gop(gradient_frames(2, 4, 4), GopKind::P));
}

TEST(StructureGop, MixedGeometry) {
  auto frames = gradient_frames(2, 4, 4);
  frames.push_back(gradient_frames(1, 8, 4)[0]);
  EXPECT_THROW(ml::video::structure_gop(frames, GopKind::P), ml::ShapeError);
}

TEST(PadClip, Examples) {
  auto p17 = ml::video::pad_clip(ml::video::structure_gop(gradient_frames(17, 64, 64), GopKind::P), 8);
  EXPECT_EQ(p17.clip.size(), 24);
  EXPECT_EQ(p17.clip.width(), 64);
  EXPECT_EQ(p17.original, (ml::video::OriginalDims{17, 64, 64}));
  EXPECT_EQ(p17.clip.roles[17], FrameRole::Pad);
  EXPECT_EQ(p17.clip.referencing_indices().size(), 16u);

  auto c16 = ml::video::structure_gop(gradient_frames(16, 64, 64), GopKind::P);
  auto p16 = ml::video::pad_clip(c16, 8);
  EXPECT_EQ(p16.clip.frames, c16.frames);
  EXPECT_EQ(p16.clip.roles, c16.roles);

  auto p18 = ml::video::pad_clip(ml::video::structure_gop(gradient_frames(18, 60, 60), GopKind::B), 8);
  EXPECT_EQ(p18.clip.size(), 24);
  EXPECT_EQ(p18.clip.width(), 64);
  EXPECT_EQ(p18.clip.height(), 64);
  EXPECT_EQ(p18.clip.frames[20], p18.clip.frames[17]);
  EXPECT_EQ(p18.clip.frames[0].at(0, 63, 63), p18.clip.frames[0].at(0, 59, 59));
}

TEST(PadClip, CropRestoresOriginal) {
  for (auto [n, w, h, m] : {std::tuple{5, 7, 3, 4}, {9, 16, 10, 8}, {3, 1, 1, 2}, {4, 5, 5, 1}}) {
    auto clip = ml::video::structure_gop(gradient_frames(n, w, h), GopKind::P);
    auto padded = ml::video::pad_clip(clip, m);
    EXPECT_EQ(padded.clip.size() % m, 0);
    EXPECT_EQ(padded.clip.width() % m, 0);
    auto back = ml::video::crop_clip(padded.clip, padded.original);
    EXPECT_EQ(back.frames, clip.frames);
    EXPECT_EQ(back.roles, clip.roles);
  }
  EXPECT_THROW(ml::video::pad_clip(ml::video::structure_gop(gradient_frames(2, 4, 4), GopKind::P), 0),
               ml::ConfigError);
}

TEST(ColorSpace, RgbYuvRoundTripWithinOneLevel) {
  Frame rgb(4, 1, 3, {0, 255, 128, 30, 0, 255, 128, 200, 0, 255, 128, 90});
  auto back = ml::video::yuv_to_rgb(ml::video::rgb_to_yuv(rgb));
  for (std::size_t i = 0; i < rgb.data().size(); ++i) EXPECT_NEAR(back.data()[i], rgb.data()[i], 1.0);
}
