#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/harness/synth.hpp"
#include "motionlab/motion/search.hpp"
#include "motionlab/net/model.hpp"
#include "motionlab/net/train.hpp"

namespace motionlab::harness {

enum class CodecChoice { Block, Learned };

/// Every knob of a command. Each run is reproducible from this and `seed`.
struct RunConfig {
  // data
  std::filesystem::path input;  // y4m; empty means synthetic clips
  SynthKind synth = SynthKind::TwoObjects;
  int clips = 4;
  int width = 64;
  int height = 64;
  int gop_length = 0;  // 0: 17 frames for P GOPs, 18 for B GOPs
  video::GopKind gop = video::GopKind::P;
  SynthParams synth_params;

  // codec
  CodecChoice codec = CodecChoice::Block;
  motion::Algorithm algorithm = motion::Algorithm::ES;
  int block = 16;
  int range = 7;
  bool mvd = false;
  bool chain_original = false;
  std::filesystem::path checkpoint;
  std::filesystem::path init_from;

  // model and training
  int c_bnd = 8;
  int hidden = 32;
  bool dba = false;
  int levels = 8;
  bool conditioned = true;
  bool multiscale = true;
  double lambda = 1e-4;
  bool flow = false;
  double alpha = 1.0;
  int epochs = 60;
  int steps_per_epoch = 10;
  int batch = 3;
  double lr = 1e-4;
  int validation_clips = 4;
  std::filesystem::path log;

  // outputs
  std::filesystem::path output;
  std::filesystem::path iframes;
  bool timings = false;
  std::uint64_t seed = 1;

  int frames_per_gop() const {
    if (gop_length > 0) return gop_length;
    return gop == video::GopKind::P ? 17 : 18;
  }

  net::NetConfig net_config() const {
    net::NetConfig n;
    n.c_bnd = c_bnd;
    n.width = hidden;
    n.kind = gop;
    n.conditioned = conditioned;
    n.multiscale = multiscale;
    n.dba = dba;
    n.dba_levels = levels;
    return n;
  }

  /// Epoch count and decay points scaled from a 150-epoch schedule with
  /// halvings at 30, 100 and 140.
  net::TrainOptions train_options() const {
    net::TrainOptions o;
    o.epochs = epochs;
    o.steps_per_epoch = steps_per_epoch;
    o.batch = batch;
    o.lr = lr;
    const int reference[] = {30, 100, 140};
    o.decay_epochs = tensor::scale_decay_epochs(reference, 150, epochs);
    o.lambda = dba ? lambda : 0.0;
    o.flow = flow;
    o.flow_scale = alpha;
    o.flow_range = range;
    o.seed = seed;
    o.checkpoint = checkpoint;
    o.log = log;
    return o;
  }
};

struct SettingInfo {
  const char* key;
  const char* help;
};

/// Every key accepted by apply_setting, with a one-line description.
inline constexpr SettingInfo kSettings[] = {
    {"input", "input y4m (bench/encode/metrics) or .dmc (decode); empty selects synthetic clips"},
    {"synth", "synthetic clip kind: static, translate, two_objects, rotate"},
    {"clips", "number of clips (synthetic) or maximum GOPs cut from the input"},
    {"width", "synthetic frame width"},
    {"height", "synthetic frame height"},
    {"gop_length", "frames per GOP; 0 picks 17 for P and 18 for B"},
    {"gop", "GOP kind: P or B"},
    {"velocity", "translate velocity dx,dy"},
    {"object_a", "two_objects velocity of the first object dx,dy"},
    {"object_b", "two_objects velocity of the second object dx,dy"},
    {"object_size", "two_objects square size"},
    {"degrees_per_frame", "rotate angular speed"},
    {"codec", "block or learned"},
    {"algorithm", "block search: ES, TSS, NTSS, SES, FSS, DS, ARPS"},
    {"block", "macroblock size"},
    {"range", "search range p"},
    {"mvd", "predictive (MVD) motion-vector coding"},
    {"chain_original", "search and predict from previous originals instead of decoded frames"},
    {"checkpoint", "model checkpoint (written by train, read by learned codecs)"},
    {"init_from", "pre-trained checkpoint that training starts from"},
    {"c_bnd", "code channels"},
    {"hidden", "hidden feature width"},
    {"dba", "3D dynamic bit assignment"},
    {"levels", "importance levels L"},
    {"conditioned", "condition the decoder on I-frames"},
    {"multiscale", "multi-scale dilated encoder blocks"},
    {"lambda", "rate weight"},
    {"flow", "add the flow (EPE) loss"},
    {"alpha", "flow loss scale, divided by the vector count"},
    {"epochs", "training epochs"},
    {"steps_per_epoch", "optimizer steps per epoch"},
    {"batch", "clips per step"},
    {"lr", "initial learning rate"},
    {"validation_clips", "held-out clips scored after each epoch"},
    {"log", "training log CSV"},
    {"output", "output path"},
    {"iframes", "y4m of I-frames (written by encode, read by decode)"},
    {"timings", "write encode/decode seconds instead of NA"},
    {"seed", "seed for data, initialization and binarizer noise"},
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError("bad value '" + v + "' for " + key);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("bad boolean '" + v + "' for " + key);
}

inline motion::MotionVector parse_vector(const std::string& key, const std::string& v) {
  const auto comma = v.find(',');
  if (comma == std::string::npos) throw ConfigError("expected dx,dy for " + key + ", got '" + v + "'");
  return {parse_number<int>(key, v.substr(0, comma)), parse_number<int>(key, v.substr(comma + 1))};
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace detail

/// Sets one field by its key. Unknown keys and malformed values are errors.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_number;
  const std::string& v = value;
  if (key == "input") c.input = v;
  else if (key == "synth") c.synth = parse_synth_kind(v);
  else if (key == "clips") c.clips = parse_number<int>(key, v);
  else if (key == "width") c.width = parse_number<int>(key, v);
  else if (key == "height") c.height = parse_number<int>(key, v);
  else if (key == "gop_length") c.gop_length = parse_number<int>(key, v);
  else if (key == "gop") {
    if (v == "P" || v == "p") c.gop = video::GopKind::P;
    else if (v == "B" || v == "b") c.gop = video::GopKind::B;
    else throw ConfigError("gop must be P or B, got '" + v + "'");
  } else if (key == "velocity") c.synth_params.velocity = detail::parse_vector(key, v);
  else if (key == "object_a") c.synth_params.object_a = detail::parse_vector(key, v);
  else if (key == "object_b") c.synth_params.object_b = detail::parse_vector(key, v);
  else if (key == "object_size") c.synth_params.object_size = parse_number<int>(key, v);
  else if (key == "degrees_per_frame") c.synth_params.degrees_per_frame = parse_number<double>(key, v);
  else if (key == "codec") {
    if (v == "block") c.codec = CodecChoice::Block;
    else if (v == "learned") c.codec = CodecChoice::Learned;
    else throw ConfigError("codec must be block or learned, got '" + v + "'");
  } else if (key == "algorithm") c.algorithm = motion::parse_algorithm(v);
  else if (key == "block") c.block = parse_number<int>(key, v);
  else if (key == "range") c.range = parse_number<int>(key, v);
  else if (key == "mvd") c.mvd = parse_bool(key, v);
  else if (key == "chain_original") c.chain_original = parse_bool(key, v);
  else if (key == "checkpoint") c.checkpoint = v;
  else if (key == "init_from") c.init_from = v;
  else if (key == "c_bnd") c.c_bnd = parse_number<int>(key, v);
  else if (key == "hidden") c.hidden = parse_number<int>(key, v);
  else if (key == "dba") c.dba = parse_bool(key, v);
  else if (key == "levels") c.levels = parse_number<int>(key, v);
  else if (key == "conditioned") c.conditioned = parse_bool(key, v);
  else if (key == "multiscale") c.multiscale = parse_bool(key, v);
  else if (key == "lambda") c.lambda = parse_number<double>(key, v);
  else if (key == "flow") c.flow = parse_bool(key, v);
  else if (key == "alpha") c.alpha = parse_number<double>(key, v);
  else if (key == "epochs") c.epochs = parse_number<int>(key, v);
  else if (key == "steps_per_epoch") c.steps_per_epoch = parse_number<int>(key, v);
  else if (key == "batch") c.batch = parse_number<int>(key, v);
  else if (key == "lr") c.lr = parse_number<double>(key, v);
  else if (key == "validation_clips") c.validation_clips = parse_number<int>(key, v);
  else if (key == "log") c.log = v;
  else if (key == "output") c.output = v;
  else if (key == "iframes") c.iframes = v;
  else if (key == "timings") c.timings = parse_bool(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else throw ConfigError("unknown setting '" + key + "'");
  c.synth_params.range = c.range;
  c.synth_params.gop = c.gop;
}

/// key=value lines; blank lines and lines starting with # are ignored.
inline std::vector<std::pair<std::string, std::string>> parse_settings(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(n) + ": expected key=value, got '" + line + "'");
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline void apply_settings(RunConfig& c, const std::string& text) {
  for (const auto& [k, v] : parse_settings(text)) apply_setting(c, k, v);
}

inline void load_config_file(RunConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_settings(c, ss.str());
}

}  // namespace motionlab::harness
