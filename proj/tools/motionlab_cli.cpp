#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "motionlab/harness/bench.hpp"

using namespace motionlab;
using harness::RunConfig;

namespace {

struct Command {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::string config_file;
};

void add_settings(Command& cmd) {
  cmd.app->add_option("--config", cmd.config_file, "key=value settings file; flags override it");
  for (const auto& s : harness::kSettings) {
    std::string name = "--" + std::string(s.key);
    std::string dashed = name;
    for (auto& ch : dashed)
      if (ch == '_') ch = '-';
    if (dashed != name) name += "," + dashed;
    cmd.app->add_option(name, cmd.values[s.key], s.help);
  }
}

RunConfig resolve(const Command& cmd) {
  RunConfig c;
  if (!cmd.config_file.empty()) harness::load_config_file(c, cmd.config_file);
  for (const auto& s : harness::kSettings)
    if (cmd.app->get_option("--" + std::string(s.key))->count() > 0)
      harness::apply_setting(c, s.key, cmd.values.at(s.key));
  return c;
}

void emit_report(const std::vector<metrics::ReportRow>& rows, const RunConfig& c) {
  if (c.output.empty()) std::cout << metrics::format_report(rows, c.timings);
  else std::cout << "wrote " << rows.size() << " rows to " << c.output.string() << "\n";
}

int run_train(const RunConfig& c) {
  if (c.checkpoint.empty()) throw ConfigError("train needs --checkpoint");
  const auto res = harness::train_model(c);
  std::cout << "steps " << res.log.size() << ", final loss " << res.log.back().total
            << ", best validation " << res.best_validation << ", checkpoint " << c.checkpoint.string()
            << "\n";
  return 0;
}

int run_encode(const RunConfig& c) {
  if (c.output.empty()) throw ConfigError("encode needs --output for the .dmc stream");
  const auto codec = harness::make_codec(c);
  RunConfig data = c;
  data.gop = codec.config.gop;
  std::vector<bitstream::CodedGop> gops;
  std::vector<video::Frame> iframes;
  for (const auto& clip : harness::load_dataset(data)) {
    gops.push_back(harness::encode(codec, clip.clip).gop);
    for (auto& f : harness::iframes_of(clip.clip)) iframes.push_back(std::move(f));
  }
  bitstream::write_dmc(c.output, gops);
  if (!c.iframes.empty()) video::write_y4m(c.iframes, iframes, video::Chroma::C444);
  double bits = 0;
  for (const auto& g : gops) bits += bitstream::bits_per_pixel(g);
  std::cout << "encoded " << gops.size() << " GOPs, mean bpp " << bits / gops.size() << "\n";
  return 0;
}

int run_decode(const RunConfig& c) {
  if (c.input.empty() || c.iframes.empty() || c.output.empty())
    throw ConfigError("decode needs --input (.dmc), --iframes (y4m) and --output (y4m)");
  const auto gops = bitstream::read_dmc(c.input);
  RunConfig need = c;
  const bool learned = !gops.empty() && gops.front().learned();
  need.codec = learned ? harness::CodecChoice::Learned : harness::CodecChoice::Block;
  const auto codec = harness::make_codec(need);
  const auto iframes = video::read_y4m(c.iframes).frames;
  std::size_t next = 0;
  std::vector<video::Frame> out;
  for (const auto& g : gops) {
    const auto n = static_cast<std::size_t>(g.reference_frames);
    if (next + n > iframes.size()) throw SizeError("decode: the I-frame file has too few frames");
    const std::vector<video::Frame> refs(iframes.begin() + next, iframes.begin() + next + n);
    next += n;
    out.push_back(refs.front());
    for (auto& f : harness::decode(codec, g, refs)) out.push_back(std::move(f));
    if (n > 1) out.push_back(refs.back());
  }
  video::write_y4m(c.output, out, video::Chroma::C444);
  std::cout << "decoded " << gops.size() << " GOPs, " << out.size() << " frames\n";
  return 0;
}

int run_bench_cmd(const RunConfig& c) {
  emit_report(harness::run_bench(c), c);
  return 0;
}

int run_sweep(const RunConfig& base, const Command& cmd, const std::vector<std::string>& files) {
  std::vector<RunConfig> configs;
  for (const auto& f : files) {
    RunConfig c = base;
    harness::load_config_file(c, f);
    for (const auto& s : harness::kSettings)
      if (cmd.app->get_option("--" + std::string(s.key))->count() > 0 && std::string(s.key) != "output")
        harness::apply_setting(c, s.key, cmd.values.at(s.key));
    configs.push_back(c);
  }
  emit_report(harness::rd_sweep(configs, base.output, base.timings), base);
  return 0;
}

int run_metrics(const RunConfig& c, const std::string& reference) {
  if (reference.empty() || c.input.empty()) throw ConfigError("metrics needs --reference and --input y4m files");
  const auto ref = video::read_y4m(reference).frames;
  const auto rec = video::read_y4m(c.input).frames;
  if (ref.size() != rec.size() || ref.size() < 2)
    throw ShapeError("metrics: the files need the same number of frames, at least 2");
  video::GopClip clip = video::structure_gop(ref, video::GopKind::P);
  const std::vector<video::Frame> scored(rec.begin() + 1, rec.end());
  auto q = metrics::score_frames(harness::scored_originals(clip), scored);
  harness::score_flow(q, clip, scored, c.range);
  const std::vector<metrics::ReportRow> rows{{"external", "frames=" + std::to_string(scored.size()),
                                              c.input.filename().string(), q}};
  if (!c.output.empty()) metrics::write_report(c.output, rows);
  emit_report(rows, c);
  return 0;
}

int run_synth(const RunConfig& c) {
  if (c.output.empty()) throw ConfigError("synth needs --output");
  const auto s = harness::synth_for(c, c.seed);
  video::save_y4m(c.output, s.clip);
  std::cout << "wrote " << s.clip.size() << " frames of " << c.width << "x" << c.height << " ("
            << harness::synth_kind_name(c.synth) << ") to " << c.output.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motionlab: learned binary motion codes and block-matching motion estimation"};
  app.require_subcommand(1);
  std::string threads;
  app.add_option("--threads", threads, "worker cap (sets MOTIONLAB_THREADS)");

  const std::pair<const char*, const char*> names[] = {
      {"train", "train a learned model on synthetic clips"},
      {"encode", "encode clips into a .dmc stream"},
      {"decode", "decode a .dmc stream with its I-frames"},
      {"bench", "encode, decode and score clips into a CSV report"},
      {"rd-sweep", "one aggregated rate-distortion row per config file"},
      {"metrics", "score a reconstruction against a reference y4m"},
      {"synth", "write a synthetic clip as y4m"},
  };
  std::map<std::string, Command> cmds;
  for (const auto& [name, help] : names) {
    auto& cmd = cmds[name];
    cmd.app = app.add_subcommand(name, help);
    cmd.app->fallthrough();
    add_settings(cmd);
  }
  std::vector<std::string> sweep_files;
  cmds["rd-sweep"].app->add_option("sweep", sweep_files, "config files, one rate-distortion point each");
  std::string reference;
  cmds["metrics"].app->add_option("--reference", reference, "reference y4m");

  CLI11_PARSE(app, argc, argv);
  if (!threads.empty()) setenv("MOTIONLAB_THREADS", threads.c_str(), 1);
  try {
    for (auto& [name, cmd] : cmds) {
      if (!cmd.app->parsed()) continue;
      const RunConfig c = resolve(cmd);
      if (name == "train") return run_train(c);
      if (name == "encode") return run_encode(c);
      if (name == "decode") return run_decode(c);
      if (name == "bench") return run_bench_cmd(c);
      if (name == "rd-sweep") return run_sweep(c, cmd, sweep_files);
      if (name == "metrics") return run_metrics(c, reference);
      if (name == "synth") return run_synth(c);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
