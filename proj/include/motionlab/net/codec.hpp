#pragma once

#include <vector>

#include "motionlab/bitstream/container.hpp"
#include "motionlab/dba/bit_assign.hpp"
#include "motionlab/net/batch.hpp"
#include "motionlab/net/model.hpp"
#include "motionlab/video/gop.hpp"

namespace motionlab::net {

/// Model output for one clip in eval mode, before serialization.
struct Prediction {
  std::vector<video::Frame> frames;  // 8-bit, original geometry, scored frames only
  dba::CodeDims dims;
  std::vector<float> code;  // transmitted code (masked channels 0), layout (C, t, h, w)
  std::vector<int> levels;  // quantized importance per site; empty without bit assignment
};

namespace detail {

inline video::PaddedClip prepare(const video::GopClip& clip, const NetConfig& cfg) {
  if (clip.kind != cfg.kind) throw ConfigError("clip GOP kind does not match the model");
  const auto norm = clip.normalized() ? clip : video::normalize(clip);
  return video::pad_clip(norm, cfg.downsample());
}

/// Decoded frames of batch item 0 back to 8-bit at the original geometry.
inline std::vector<video::Frame> finish(const Tensor<float>& pred, const video::OriginalDims& dims) {
  auto frames = tensor_frames(pred, 0);
  video::GopClip tmp;
  tmp.frames = std::move(frames);
  tmp.roles.assign(tmp.frames.size(), video::FrameRole::P);
  tmp = video::crop_clip(tmp, {static_cast<int>(tmp.frames.size()), dims.height, dims.width});
  return video::denormalize(tmp).frames;
}

}  // namespace detail

inline Prediction predict_clip(const ParamSet<float>& ps, const NetConfig& cfg, const video::GopClip& clip) {
  const auto padded = detail::prepare(clip, cfg);
  const std::vector<const video::GopClip*> batch{&padded.clip};
  const int n = static_cast<int>(padded.clip.referencing_indices().size());
  const auto enc = encode_motion(ps, cfg, clip_tensor<float>(batch), BinarizeMode::Eval, 0);
  const auto pyr = condition_features(ps, cfg, iframe_tensors<float>(batch));
  Prediction p;
  p.frames = detail::finish(decode_frames(ps, cfg, enc.transmitted, pyr, 1, n), padded.original);
  const auto s = enc.code.shape();
  p.dims = {cfg.c_bnd, static_cast<int>(s.t()), static_cast<int>(s.h()), static_cast<int>(s.w())};
  p.code.assign(enc.transmitted.values().begin(), enc.transmitted.values().end());
  if (cfg.dba) p.levels = dba::quantize_importance(enc.importance.values(), cfg.dba_levels);
  return p;
}

inline bitstream::CodedGop to_coded(const Prediction& p, const NetConfig& cfg, const video::GopClip& clip) {
  bitstream::CodedGop g;
  g.kind = cfg.kind == video::GopKind::P ? bitstream::CodecKind::LearnedP : bitstream::CodecKind::LearnedB;
  g.width = clip.width();
  g.height = clip.height();
  g.reference_frames = cfg.reference_frames();
  g.referencing_frames = static_cast<int>(clip.referencing_indices().size());
  g.c_bnd = cfg.c_bnd;
  g.levels = cfg.dba ? cfg.dba_levels : 0;
  g.payload = dba::pack_code<float>(p.code, p.levels, p.dims, g.levels);
  return g;
}

inline bitstream::CodedGop encode_clip(const ParamSet<float>& ps, const NetConfig& cfg, const video::GopClip& clip) {
  return to_coded(predict_clip(ps, cfg, clip), cfg, clip);
}

/// Reconstructs the scored frames from a container and the I-frames
/// (8-bit; past then future for B GOPs).
inline std::vector<video::Frame> decode_clip(const ParamSet<float>& ps, const NetConfig& cfg,
                                             const bitstream::CodedGop& g,
                                             const std::vector<video::Frame>& iframes) {
  if (!g.learned()) throw ConfigError("decode_clip: container holds a block codec payload");
  const bool b_kind = g.kind == bitstream::CodecKind::LearnedB;
  if (b_kind != (cfg.kind == video::GopKind::B) || g.c_bnd != cfg.c_bnd ||
      g.levels != (cfg.dba ? cfg.dba_levels : 0))
    throw ConfigError("decode_clip: container does not match the model");
  if (static_cast<int>(iframes.size()) != cfg.reference_frames())
    throw ArityError("decode_clip: expected " + std::to_string(cfg.reference_frames()) + " I-frames");
  const int m = cfg.downsample();
  const int T = video::round_up(g.reference_frames + g.referencing_frames, m);
  const int Hp = video::round_up(g.height, m), Wp = video::round_up(g.width, m);
  const dba::CodeDims dims{g.c_bnd, T / m, Hp / m, Wp / m};
  const auto unpacked = dba::unpack_code(g.payload, dims, g.levels);
  const auto code = Tensor<float>::from({1, g.c_bnd, dims.t, dims.h, dims.w}, unpacked.code);

  // I-frames as one-frame clips, padded spatially like the encoder input.
  std::vector<Tensor<float>> itensors;
  for (const auto& f : iframes) {
    video::GopClip one;
    one.frames = {f.normalized() ? f : video::normalize_frame(f)};
    one.roles = {video::FrameRole::I};
    const auto padded = video::pad_clip(one, m);
    const std::vector<const video::GopClip*> b{&padded.clip};
    itensors.push_back(frames_tensor<float>(b, 0, 1));
  }
  const auto pyr = condition_features(ps, cfg, itensors);
  const auto pred = decode_frames(ps, cfg, code, pyr, 1, g.referencing_frames);
  return detail::finish(pred, {g.referencing_frames, g.height, g.width});
}

}  // namespace motionlab::net
