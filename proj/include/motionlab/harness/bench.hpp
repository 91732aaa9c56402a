#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "motionlab/bitstream/container.hpp"
#include "motionlab/error.hpp"
#include "motionlab/harness/config.hpp"
#include "motionlab/harness/synth.hpp"
#include "motionlab/metrics/report.hpp"
#include "motionlab/motion/search.hpp"
#include "motionlab/net/codec.hpp"
#include "motionlab/net/train.hpp"
#include "motionlab/parallel.hpp"
#include "motionlab/video/y4m.hpp"

namespace motionlab::harness {

using video::Frame;
using video::GopClip;

/// Independent seed streams so training, validation and benchmark clips
/// never coincide.
enum class SeedStream : std::uint64_t { Bench = 0, Train = 1, Validation = 2 };

inline std::uint64_t stream_seed(std::uint64_t seed, SeedStream s, std::uint64_t i) {
  return detail::mix(detail::mix(seed * 4 + static_cast<std::uint64_t>(s)) + i);
}

inline SynthClip synth_for(const RunConfig& c, std::uint64_t seed) {
  SynthParams prm = c.synth_params;
  prm.range = c.range;
  prm.gop = c.gop;
  return synth_clip(c.synth, c.frames_per_gop(), c.width, c.height, prm, seed);
}

struct NamedClip {
  std::string name;
  GopClip clip;
};

/// Benchmark clips: synthetic ones from the bench seed stream, or
/// consecutive GOPs cut from the input y4m (at most `clips` when positive).
inline std::vector<NamedClip> load_dataset(const RunConfig& c) {
  std::vector<NamedClip> out;
  if (c.input.empty()) {
    for (int i = 0; i < c.clips; ++i)
      out.push_back({"clip" + std::to_string(i),
                     synth_for(c, stream_seed(c.seed, SeedStream::Bench, i)).clip});
    return out;
  }
  const auto frames = video::read_y4m(c.input).frames;
  const int n = c.frames_per_gop();
  for (int start = 0; start + n <= static_cast<int>(frames.size()); start += n) {
    if (c.clips > 0 && static_cast<int>(out.size()) >= c.clips) break;
    std::vector<Frame> part(frames.begin() + start, frames.begin() + start + n);
    out.push_back({"gop" + std::to_string(out.size()), video::structure_gop(std::move(part), c.gop)});
  }
  if (out.empty())
    throw SizeError(c.input.string() + " holds " + std::to_string(frames.size()) +
                    " frames, fewer than one GOP of " + std::to_string(n));
  return out;
}

/// A configured codec. Learned codecs carry their model; the GOP kind of a
/// learned codec is the model's.
struct Codec {
  RunConfig config;
  std::optional<net::LoadedModel> model;

  bool learned() const { return model.has_value(); }
};

inline Codec make_codec(const RunConfig& c) {
  Codec codec{c, std::nullopt};
  if (c.codec == CodecChoice::Learned) {
    if (c.checkpoint.empty()) throw ConfigError("the learned codec needs a checkpoint");
    if (!std::filesystem::exists(c.checkpoint))
      throw ConfigError("checkpoint " + c.checkpoint.string() + " does not exist");
    codec.model = net::load_model(c.checkpoint);
    codec.config.gop = codec.model->config.kind;
  }
  return codec;
}

inline std::vector<Frame> iframes_of(const GopClip& clip) {
  std::vector<Frame> out;
  for (int i : clip.reference_indices()) out.push_back(clip.frames[i]);
  return out;
}

inline std::vector<Frame> scored_originals(const GopClip& clip) {
  std::vector<Frame> out;
  for (int i : clip.referencing_indices()) out.push_back(clip.frames[i]);
  return out;
}

struct Coded {
  bitstream::CodedGop gop;
  /// Frames the encoder predicts for the scored positions.
  std::vector<Frame> predicted;
};

/// IPPP block coding: each scored frame is searched against the previous
/// decoded frame (or the previous original with `chain_original`).
inline Coded encode_block(const RunConfig& c, const GopClip& clip) {
  Coded out;
  auto& g = out.gop;
  g.kind = bitstream::CodecKind::Block;
  g.width = clip.width();
  g.height = clip.height();
  g.reference_frames = clip.reference_count();
  g.algorithm = static_cast<int>(c.algorithm);
  g.mvd = c.mvd;
  g.block = c.block;
  g.range = c.range;
  const auto idx = clip.referencing_indices();
  g.referencing_frames = static_cast<int>(idx.size());
  std::vector<motion::MotionField> fields;
  Frame chained = clip.frames[clip.reference_indices().front()];
  for (int i : idx) {
    const Frame& ref = c.chain_original ? clip.frames[i - 1] : chained;
    auto field = motion::block_search(ref, clip.frames[i], c.algorithm, c.block, c.range);
    chained = motion::motion_compensate(ref, field);
    out.predicted.push_back(chained);
    fields.push_back(std::move(field));
  }
  g.payload = bitstream::encode_mv_payload(fields, g.mv_geometry()).bits;
  return out;
}

/// Replays the decoded-frame chain from the past I-frame.
inline std::vector<Frame> decode_block(const bitstream::CodedGop& g, const std::vector<Frame>& iframes) {
  if (g.learned()) throw ConfigError("decode_block: container holds a learned payload");
  if (iframes.empty()) throw ArityError("decode_block: the past I-frame is required");
  if (iframes.front().width() != g.width || iframes.front().height() != g.height)
    throw ShapeError("decode_block: I-frame geometry does not match the container");
  std::vector<Frame> out;
  Frame ref = iframes.front();
  for (const auto& f : bitstream::decode_mv_payload(g.payload, g.mv_geometry())) {
    ref = motion::motion_compensate(ref, f);
    out.push_back(ref);
  }
  return out;
}

/// Open-loop decoding: each field is applied to the previous original frame,
/// the decoder-side counterpart of `chain_original`.
inline std::vector<Frame> decode_block_open_loop(const bitstream::CodedGop& g, const GopClip& clip) {
  if (g.learned()) throw ConfigError("decode_block_open_loop: container holds a learned payload");
  const auto idx = clip.referencing_indices();
  const auto fields = bitstream::decode_mv_payload(g.payload, g.mv_geometry());
  if (fields.size() != idx.size()) throw ShapeError("decode_block_open_loop: frame count mismatch");
  std::vector<Frame> out;
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.push_back(motion::motion_compensate(clip.frames[idx[k] - 1], fields[k]));
  return out;
}

inline Coded encode(const Codec& codec, const GopClip& clip) {
  if (!codec.learned()) return encode_block(codec.config, clip);
  const auto& m = *codec.model;
  auto p = net::predict_clip(m.params, m.config, clip);
  Coded out{net::to_coded(p, m.config, clip), std::move(p.frames)};
  return out;
}

inline std::vector<Frame> decode(const Codec& codec, const bitstream::CodedGop& g,
                                 const std::vector<Frame>& iframes) {
  if (!g.learned()) return decode_block(g, iframes);
  if (!codec.learned()) throw ConfigError("a learned container needs a checkpoint to decode");
  return net::decode_clip(codec.model->params, codec.model->config, g, iframes);
}

/// Flow divergence between consecutive originals and consecutive
/// reconstructions over each scored transition. I-frames stand in for
/// themselves on the reconstructed side.
inline void score_flow(metrics::QualityReport& q, const GopClip& clip,
                       const std::vector<Frame>& decoded, int range) {
  const auto idx = clip.referencing_indices();
  std::vector<Frame> recon = clip.frames;
  for (std::size_t k = 0; k < idx.size(); ++k) recon[idx[k]] = decoded[k];
  std::vector<motion::MotionField> truth, pred;
  for (int i : idx) {
    truth.push_back(motion::dense_flow(clip.frames[i - 1], clip.frames[i], range));
    pred.push_back(motion::dense_flow(recon[i - 1], recon[i], range));
  }
  q.epe = metrics::flow_divergence(truth, pred, metrics::FlowDivergence::Epe, true);
  q.cosine = metrics::flow_divergence(truth, pred, metrics::FlowDivergence::Cosine, true);
}

/// Encodes, serializes, parses and decodes one clip, then scores the
/// decoded frames against the originals.
inline metrics::QualityReport bench_clip(const Codec& codec, const GopClip& clip) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto coded = encode(codec, clip);
  const auto bytes = bitstream::encode_container(coded.gop);
  const auto t1 = clock::now();
  const auto parsed = bitstream::decode_container(bytes);
  const auto decoded = !codec.learned() && codec.config.chain_original
                           ? decode_block_open_loop(parsed, clip)
                           : decode(codec, parsed, iframes_of(clip));
  const auto t2 = clock::now();
  auto q = metrics::score_frames(scored_originals(clip), decoded);
  q.bpp = bitstream::bits_per_pixel(parsed);
  score_flow(q, clip, decoded, codec.config.range);
  q.encode_s = std::chrono::duration<double>(t1 - t0).count();
  q.decode_s = std::chrono::duration<double>(t2 - t1).count();
  return q;
}

inline std::string codec_name(const Codec& codec) { return codec.learned() ? "learned" : "block"; }

/// Parameter summary for the CSV params column (';'-separated).
inline std::string codec_params(const Codec& codec) {
  const auto& c = codec.config;
  if (!codec.learned()) {
    return std::string("alg=") + motion::algorithm_name(c.algorithm) + ";mb=" + std::to_string(c.block) +
           ";p=" + std::to_string(c.range) + ";mvd=" + (c.mvd ? "1" : "0") +
           ";chain=" + (c.chain_original ? "original" : "decoded");
  }
  const auto& n = codec.model->config;
  return std::string("gop=") + (n.kind == video::GopKind::P ? "P" : "B") + ";c_bnd=" +
         std::to_string(n.c_bnd) + ";dba=" + (n.dba ? "1" : "0") + ";L=" +
         std::to_string(n.dba ? n.dba_levels : 0) + ";cond=" + (n.conditioned ? "1" : "0") +
         ";model=" + c.checkpoint.filename().string();
}

/// One report row per clip in clip order. Clips are scored in parallel.
inline std::vector<metrics::ReportRow> bench_rows(const Codec& codec, const std::vector<NamedClip>& clips) {
  std::vector<metrics::QualityReport> reports(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) { reports[i] = bench_clip(codec, clips[i].clip); });
  std::vector<metrics::ReportRow> rows;
  for (std::size_t i = 0; i < clips.size(); ++i)
    rows.push_back({codec_name(codec), codec_params(codec), clips[i].name, std::move(reports[i])});
  return rows;
}

inline std::vector<metrics::ReportRow> run_bench(const RunConfig& c) {
  const auto codec = make_codec(c);
  RunConfig data = c;
  data.gop = codec.config.gop;
  const auto rows = bench_rows(codec, load_dataset(data));
  if (!c.output.empty()) metrics::write_report(c.output, rows, c.timings);
  return rows;
}

/// Means over clips of every per-clip column, as one row labelled "mean".
inline metrics::ReportRow aggregate(const std::vector<metrics::ReportRow>& rows) {
  if (rows.empty()) throw SizeError("aggregate: no rows");
  metrics::ReportRow out{rows.front().codec, rows.front().params, "mean", {}};
  auto& q = out.quality;
  std::vector<double> psnr, ssim;
  for (const auto& r : rows) {
    psnr.push_back(r.quality.psnr_mean);
    ssim.push_back(r.quality.ssim_mean);
    q.bpp += r.quality.bpp;
    q.epe += r.quality.epe;
    q.cosine += r.quality.cosine;
    q.encode_s += r.quality.encode_s;
    q.decode_s += r.quality.decode_s;
  }
  const double n = static_cast<double>(rows.size());
  q.psnr_mean = metrics::mean_of(psnr);
  q.ssim_mean = metrics::mean_of(ssim);
  q.bpp /= n;
  q.epe /= n;
  q.cosine /= n;
  q.encode_s /= n;
  q.decode_s /= n;
  return out;
}

/// One aggregated rate-distortion point per config.
inline std::vector<metrics::ReportRow> rd_sweep(const std::vector<RunConfig>& configs,
                                                const std::filesystem::path& output = {},
                                                bool timings = false) {
  std::vector<metrics::ReportRow> points;
  for (auto c : configs) {
    c.output.clear();
    points.push_back(aggregate(run_bench(c)));
  }
  if (!output.empty()) metrics::write_report(output, points, timings);
  return points;
}

/// Training clips for a config: synthetic, normalized and padded to the
/// model's alignment.
inline net::ClipSource training_source(const RunConfig& c) {
  const int m = c.net_config().downsample();
  return [c, m](std::uint64_t i) {
    return video::pad_clip(video::normalize(synth_for(c, stream_seed(c.seed, SeedStream::Train, i)).clip), m).clip;
  };
}

inline std::vector<GopClip> validation_clips(const RunConfig& c) {
  const int m = c.net_config().downsample();
  std::vector<GopClip> out;
  for (int i = 0; i < c.validation_clips; ++i)
    out.push_back(
        video::pad_clip(video::normalize(synth_for(c, stream_seed(c.seed, SeedStream::Validation, i)).clip), m)
            .clip);
  return out;
}

inline net::TrainResult train_model(const RunConfig& c) {
  if (!c.input.empty()) throw ConfigError("training uses synthetic clips; input must be empty");
  std::optional<tensor::ParamSet<float>> initial;
  if (!c.init_from.empty()) {
    if (!std::filesystem::exists(c.init_from)) throw ConfigError("no pre-trained model at " + c.init_from.string());
    initial = net::warm_start(c.net_config(), c.seed, net::load_model(c.init_from));
  }
  return net::train(c.net_config(), c.train_options(), training_source(c), validation_clips(c), std::move(initial));
}

}  // namespace motionlab::harness
