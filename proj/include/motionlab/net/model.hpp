#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "motionlab/dba/bit_assign.hpp"
#include "motionlab/error.hpp"
#include "motionlab/net/layers.hpp"
#include "motionlab/tensor/checkpoint.hpp"
#include "motionlab/tensor/ops.hpp"
#include "motionlab/video/gop.hpp"

namespace motionlab::net {

using tensor::BinarizeMode;

/// Architecture of a motion autoencoder. `conditioned` false gives the
/// unconditioned baseline, which decodes from the code alone.
struct NetConfig {
  int c_bnd = 8;
  int width = 32;
  int levels = 3;
  video::GopKind kind = video::GopKind::P;
  bool conditioned = true;
  bool multiscale = true;
  bool dba = false;
  int dba_levels = 8;
  int importance_width = 16;
  int image_channels = 3;

  int downsample() const { return 1 << levels; }
  int reference_frames() const { return kind == video::GopKind::P ? 1 : 2; }
  int condition_inputs() const { return conditioned ? reference_frames() : 0; }
  /// Conditioning feature widths at full, 1/2, 1/4 and 1/8 resolution.
  std::array<int, 4> cond_widths() const {
    const int h = std::max(4, width / 4), f = std::max(4, width / 2);
    return {h, h, f, f};
  }
  /// Decoder feature widths after each upscaling (1/4, 1/2, full).
  std::array<int, 3> decoder_widths() const {
    const int h = std::max(4, width / 2), q = std::max(4, width / 4);
    return {h, q, q};
  }

  void validate() const {
    if (levels != 3) throw ConfigError("encoder levels must be 3 (x8 compression)");
    if (c_bnd < 1) throw ConfigError("C_bnd must be >= 1");
    if (width < 3) throw ConfigError("hidden width must be >= 3");
    if (dba) dba::validate_levels(c_bnd, dba_levels);
  }
};

inline const std::array<std::string, 2> kCondNames{"cond0", "condt"};

/// Branch convolutions of a multiscale block: width / 3 channels each, the
/// remainder going to the first branch, then a 1x1x1 fuse to `width`.
template <class T>
void add_multiscale_params(tensor::ParamSet<T>& ps, const std::string& prefix, int in, int width,
                           std::mt19937_64& rng) {
  const int third = width / 3, first = width - 2 * third;
  add_conv(ps, prefix + ".b0", in, first, {3, 3, 3}, rng);
  add_conv(ps, prefix + ".b1", in, third, {3, 3, 3}, rng);
  add_conv(ps, prefix + ".b2", in, third, {3, 3, 3}, rng);
  add_conv(ps, prefix + ".fuse", width, width, {1, 1, 1}, rng);
}

/// Creates every learnable tensor with seeded initialization.
template <class T>
tensor::ParamSet<T> init_params(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  tensor::ParamSet<T> ps;
  std::mt19937_64 rng(seed);
  const int w = cfg.width;
  add_conv(ps, "enc.stem", cfg.image_channels, w, {3, 3, 3}, rng);
  for (int i = 0; i < cfg.levels; ++i) {
    const std::string p = "enc.l" + std::to_string(i);
    if (cfg.multiscale) {
      add_multiscale_params(ps, p + ".ms", w, w, rng);
    } else {
      add_conv(ps, p + ".plain", w, w, {3, 3, 3}, rng);
    }
    add_conv(ps, p + ".down", w, w, {3, 3, 3}, rng);
  }
  add_conv(ps, "enc.out", w, cfg.c_bnd, {1, 1, 1}, rng);
  if (cfg.dba) dba::add_importance_params(ps, w, cfg.importance_width, rng);

  const auto cw = cfg.cond_widths();
  for (int k = 0; k < cfg.condition_inputs(); ++k) {
    const std::string p = kCondNames[k];
    add_conv(ps, p + ".f0", cfg.image_channels, cw[0], {1, 3, 3}, rng);
    for (int l = 1; l < 4; ++l)
      add_conv(ps, p + ".f" + std::to_string(l), cw[l - 1], cw[l], {1, 3, 3}, rng);
  }
  const auto dw = cfg.decoder_widths();
  const int nc = cfg.condition_inputs();
  add_conv(ps, "dec.s3", cfg.c_bnd + nc * cw[3], 8 * dw[0], {3, 3, 3}, rng);
  add_conv(ps, "dec.s2", dw[0] + nc * cw[2], 8 * dw[1], {3, 3, 3}, rng);
  add_conv(ps, "dec.s1", dw[1] + nc * cw[1], 8 * dw[2], {3, 3, 3}, rng);
  add_conv(ps, "dec.out", dw[2] + nc * cw[0], cfg.image_channels, {3, 3, 3}, rng, 0.5);
  return ps;
}

/// Three parallel 3x3x3 branches with spatial dilations 1, 2 and 4,
/// concatenated and fused by a 1x1x1 convolution.
template <class T>
Tensor<T> multiscale_block(const ParamSet<T>& ps, const std::string& prefix, const Tensor<T>& x) {
  using namespace tensor;
  std::vector<Tensor<T>> branches;
  const int dil[3] = {1, 2, 4};
  for (int b = 0; b < 3; ++b)
    branches.push_back(leaky_relu(conv(ps, prefix + ".b" + std::to_string(b), x, dilated(dil[b]))));
  return leaky_relu(conv(ps, prefix + ".fuse", concat_channels(branches)));
}

template <class T>
struct Encoded {
  Tensor<T> features;     // penultimate features at code resolution
  Tensor<T> code;         // binarized, (N, C_bnd, T/8, H/8, W/8)
  Tensor<T> importance;   // (N, 1, ...) when bit assignment is on
  Tensor<T> mask;         // (N, C_bnd, ...) when bit assignment is on
  Tensor<T> transmitted;  // code with masked channels zeroed
};

inline void require_aligned(const Shape5& s, int multiple) {
  if (s.t() % multiple || s.h() % multiple || s.w() % multiple)
    throw ShapeError("clip " + s.str() + " is not padded to multiples of " + std::to_string(multiple));
}

/// Encoder over the whole GOP: stem, three multiscale + stride-2 stages,
/// 1x1x1 projection to C_bnd, tanh, binarization.
template <class T>
Encoded<T> encode_motion(const ParamSet<T>& ps, const NetConfig& cfg, const Tensor<T>& clip,
                         BinarizeMode mode, std::uint64_t seed) {
  using namespace tensor;
  require_aligned(clip.shape(), cfg.downsample());
  auto h = leaky_relu(conv(ps, "enc.stem", clip, same3()));
  for (int i = 0; i < cfg.levels; ++i) {
    const std::string p = "enc.l" + std::to_string(i);
    h = cfg.multiscale ? multiscale_block(ps, p + ".ms", h) : leaky_relu(conv(ps, p + ".plain", h, same3()));
    h = leaky_relu(conv(ps, p + ".down", h, down3()));
  }
  Encoded<T> e;
  e.features = h;
  e.code = stochastic_binarize(tensor::tanh(conv(ps, "enc.out", h)), mode, seed);
  e.transmitted = e.code;
  if (cfg.dba) {
    e.importance = dba::importance_forward(h, ps);
    e.mask = dba::build_mask(e.importance, cfg.c_bnd, cfg.dba_levels);
    e.transmitted = mul(e.code, e.mask);
  }
  return e;
}

/// Feature pyramid of one I-frame (N, C, 1, H, W) at full, 1/2, 1/4, 1/8.
template <class T>
using Pyramid = std::array<Tensor<T>, 4>;

template <class T>
std::vector<Pyramid<T>> condition_features(const ParamSet<T>& ps, const NetConfig& cfg,
                                           const std::vector<Tensor<T>>& iframes) {
  using namespace tensor;
  if (static_cast<int>(iframes.size()) != cfg.reference_frames())
    throw ArityError("condition_features: expected " + std::to_string(cfg.reference_frames()) +
                     " I-frames, got " + std::to_string(iframes.size()));
  std::vector<Pyramid<T>> out;
  if (!cfg.conditioned) return out;
  Conv3dOptions same2d, down2d;
  same2d.padding = {0, 1, 1};
  down2d.padding = {0, 1, 1};
  down2d.stride = {1, 2, 2};
  for (std::size_t k = 0; k < iframes.size(); ++k) {
    if (iframes[k].shape().t() != 1) throw ShapeError("condition_features: I-frame must have t = 1");
    const std::string p = kCondNames[k];
    Pyramid<T> pyr;
    pyr[0] = leaky_relu(conv(ps, p + ".f0", iframes[k], same2d));
    for (int l = 1; l < 4; ++l) pyr[l] = leaky_relu(conv(ps, p + ".f" + std::to_string(l), pyr[l - 1], down2d));
    out.push_back(std::move(pyr));
  }
  return out;
}

/// Decoder: at each scale the matching conditioning features (tiled over
/// time) join the channel axis, then a 3x3x3 convolution and a 2x pixel
/// shuffle. Returns frames [first, first + count) of the decoded GOP.
template <class T>
Tensor<T> decode_frames(const ParamSet<T>& ps, const NetConfig& cfg, const Tensor<T>& code,
                        const std::vector<Pyramid<T>>& pyramids, int first, int count) {
  using namespace tensor;
  if (code.shape().c() != cfg.c_bnd)
    throw ShapeError("decode_frames: code " + code.shape().str() + " needs " + std::to_string(cfg.c_bnd) +
                     " channels");
  if (static_cast<int>(pyramids.size()) != cfg.condition_inputs())
    throw ArityError("decode_frames: wrong number of conditioning pyramids");
  auto join = [&](const Tensor<T>& h, int level) {
    if (pyramids.empty()) return h;
    std::vector<Tensor<T>> parts{h};
    for (const auto& pyr : pyramids) {
      const auto& f = pyr[level];
      if (f.shape().h() != h.shape().h() || f.shape().w() != h.shape().w() || f.shape().n() != h.shape().n())
        throw ShapeError("decode_frames: conditioning " + f.shape().str() + " does not match stage " +
                         h.shape().str());
      parts.push_back(repeat_time(f, h.shape().t()));
    }
    return concat_channels(parts);
  };
  auto h = pixel_shuffle3d(leaky_relu(conv(ps, "dec.s3", join(code, 3), same3())), 2);
  h = pixel_shuffle3d(leaky_relu(conv(ps, "dec.s2", join(h, 2), same3())), 2);
  h = pixel_shuffle3d(leaky_relu(conv(ps, "dec.s1", join(h, 1), same3())), 2);
  auto y = tensor::tanh(conv(ps, "dec.out", join(h, 0), same3()));
  if (first < 0 || count < 1 || first + count > y.shape().t())
    throw ShapeError("decode_frames: crop [" + std::to_string(first) + ", " + std::to_string(first + count) +
                     ") outside " + std::to_string(y.shape().t()) + " decoded frames");
  return slice_time(y, first, count);
}

/// Mean squared error over referencing-frame samples.
template <class T>
Tensor<T> loss_reconstruction(const Tensor<T>& pred, const Tensor<T>& target) {
  return tensor::mse(pred, target);
}

/// Model description stored next to the weights in a checkpoint.
template <class T>
std::vector<tensor::CheckpointEntry> model_entries(const ParamSet<T>& ps, const NetConfig& cfg) {
  auto entries = tensor::to_entries(ps);
  auto meta = [&](const std::string& k, double v) {
    entries.push_back({"meta." + k, {1}, {static_cast<float>(v)}});
  };
  meta("c_bnd", cfg.c_bnd);
  meta("width", cfg.width);
  meta("levels", cfg.levels);
  meta("kind", cfg.kind == video::GopKind::B ? 1 : 0);
  meta("conditioned", cfg.conditioned);
  meta("multiscale", cfg.multiscale);
  meta("dba", cfg.dba);
  meta("dba_levels", cfg.dba_levels);
  meta("importance_width", cfg.importance_width);
  meta("image_channels", cfg.image_channels);
  return entries;
}

struct LoadedModel {
  NetConfig config;
  ParamSet<float> params;
};

inline LoadedModel model_from_entries(const std::vector<tensor::CheckpointEntry>& entries) {
  LoadedModel m;
  auto get = [&](const std::string& k) -> int {
    for (const auto& e : entries)
      if (e.name == "meta." + k && e.values.size() == 1) return static_cast<int>(e.values[0]);
    throw FormatError("checkpoint lacks model field '" + k + "'");
  };
  m.config.c_bnd = get("c_bnd");
  m.config.width = get("width");
  m.config.levels = get("levels");
  m.config.kind = get("kind") ? video::GopKind::B : video::GopKind::P;
  m.config.conditioned = get("conditioned") != 0;
  m.config.multiscale = get("multiscale") != 0;
  m.config.dba = get("dba") != 0;
  m.config.dba_levels = get("dba_levels");
  m.config.importance_width = get("importance_width");
  m.config.image_channels = get("image_channels");
  m.config.validate();
  m.params = tensor::from_entries<float>(entries);
  // Structure check: names and shapes must match a fresh model.
  const auto fresh = init_params<float>(m.config, 0);
  if (fresh.size() != m.params.size()) throw FormatError("checkpoint parameter set does not match its config");
  for (const auto& [name, t] : fresh) {
    const auto* have = m.params.find(name);
    if (!have || have->shape() != t.shape())
      throw FormatError("checkpoint parameter '" + name + "' missing or misshapen");
  }
  return m;
}

inline void save_model(const std::filesystem::path& path, const ParamSet<float>& ps, const NetConfig& cfg) {
  tensor::save_checkpoint(path, model_entries(ps, cfg));
}

inline LoadedModel load_model(const std::filesystem::path& path) {
  return model_from_entries(tensor::load_checkpoint(path));
}

/// Initial parameters for `cfg` taken from a pre-trained model: every parameter
/// the pre-trained set holds is copied, the rest (the importance net when
/// adding bit assignment) keep their fresh initialization.
inline tensor::ParamSet<float> warm_start(const NetConfig& cfg, std::uint64_t seed, const LoadedModel& from) {
  const auto& f = from.config;
  if (f.c_bnd != cfg.c_bnd || f.width != cfg.width || f.kind != cfg.kind || f.conditioned != cfg.conditioned ||
      f.multiscale != cfg.multiscale || f.image_channels != cfg.image_channels)
    throw ConfigError("pre-trained model architecture does not match the model being trained");
  auto ps = init_params<float>(cfg, seed);
  for (auto& [name, t] : ps) {
    const auto* src = from.params.find(name);
    if (!src) continue;
    if (src->shape() != t.shape()) throw ConfigError("pre-trained parameter '" + name + "' has another shape");
    std::ranges::copy(src->values(), t.mutable_values().begin());
  }
  return ps;
}

}  // namespace motionlab::net
