#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "motionlab/error.hpp"
#include "motionlab/io.hpp"
#include "motionlab/net/batch.hpp"
#include "motionlab/net/flow_loss.hpp"
#include "motionlab/net/model.hpp"
#include "motionlab/tensor/adam.hpp"

namespace motionlab::net {

struct TrainOptions {
  int epochs = 60;
  int steps_per_epoch = 10;
  int batch = 3;
  double lr = 1e-4;
  std::vector<int> decay_epochs{12, 40, 56};
  /// Rate weight; used when the model has bit assignment.
  double lambda = 0.0;
  bool flow = false;
  /// Flow term weight is flow_scale / (number of flow vectors).
  double flow_scale = 1.0;
  int flow_range = 7;
  std::uint64_t seed = 1;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
};

/// Produces the i-th training clip: normalized, padded to multiples of 8.
using ClipSource = std::function<video::GopClip(std::uint64_t)>;

struct StepRecord {
  int step = 0;
  double lr = 0, l_r = 0, l_b = 0, l_f = 0, total = 0;
};

struct TrainResult {
  ParamSet<float> last;
  ParamSet<float> best;
  double best_validation = std::numeric_limits<double>::infinity();
  std::vector<double> validation;
  std::vector<StepRecord> log;
};

/// Number of frames after the first that are scored (pads excluded).
inline int scored_frames(const video::GopClip& clip) {
  return static_cast<int>(clip.referencing_indices().size());
}

struct StepLosses {
  Tensor<float> total;
  double l_r = 0, l_b = 0, l_f = 0;
};

/// Forward pass and the training objective for one batch.
inline StepLosses training_objective(const ParamSet<float>& ps, const NetConfig& cfg,
                                     const std::vector<const video::GopClip*>& clips, BinarizeMode mode,
                                     std::uint64_t noise_seed, const TrainOptions& opt) {
  using namespace tensor;
  const int n = scored_frames(*clips.front());
  const auto x = clip_tensor<float>(clips);
  const auto target = frames_tensor<float>(clips, 1, n);
  const auto enc = encode_motion(ps, cfg, x, mode, noise_seed);
  const auto pyr = condition_features(ps, cfg, iframe_tensors<float>(clips));
  const auto pred = decode_frames(ps, cfg, enc.transmitted, pyr, 1, n);
  StepLosses out;
  out.total = loss_reconstruction(pred, target);
  out.l_r = out.total.item();
  if (cfg.dba) {
    const auto rate = scale(dba::rate_loss(enc.importance), 1.0f / static_cast<float>(clips.size()));
    out.l_b = rate.item();
    if (opt.lambda != 0.0) out.total = add(out.total, scale(rate, static_cast<float>(opt.lambda)));
  }
  if (opt.flow) {
    const double vectors = static_cast<double>(clips.size()) * n *
                           ((x.shape().h() + 3) / 4) * ((x.shape().w() + 3) / 4);
    const auto lf = flow_loss_epe(pred, target, frames_tensor<float>(clips, 0, 1), opt.flow_range,
                                  opt.flow_scale / vectors);
    out.l_f = lf.item();
    out.total = add(out.total, lf);
  }
  return out;
}

/// Eval-mode reconstruction loss averaged over clips.
inline double validation_loss(const ParamSet<float>& ps, const NetConfig& cfg,
                              const std::vector<video::GopClip>& clips) {
  if (clips.empty()) return 0.0;
  double s = 0;
  TrainOptions none;
  for (const auto& c : clips) s += training_objective(ps, cfg, {&c}, BinarizeMode::Eval, 0, none).l_r;
  return s / static_cast<double>(clips.size());
}

inline std::string format_train_log(const std::vector<StepRecord>& log) {
  std::string s = "step,lr,l_r,l_b,l_f,total\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%.8g,%.8g,%.8g,%.8g,%.8g\n", r.step, r.lr, r.l_r, r.l_b, r.l_f, r.total);
    s += buf;
  }
  return s;
}

/// Adam training with step-decayed learning rate. Validation runs after
/// every epoch; the best parameters are kept (and checkpointed if a path
/// is given). A non-finite loss aborts with the step index.
inline TrainResult train(const NetConfig& cfg, const TrainOptions& opt, const ClipSource& source,
                         const std::vector<video::GopClip>& validation,
                         std::optional<ParamSet<float>> initial = std::nullopt) {
  cfg.validate();
  if (opt.batch < 1 || opt.epochs < 0 || opt.steps_per_epoch < 1) throw ConfigError("invalid training schedule");
  TrainResult res;
  ParamSet<float> ps = initial ? initial->clone() : init_params<float>(cfg, opt.seed);
  tensor::Adam<float> adam({opt.lr});
  int step = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    adam.set_lr(tensor::step_decay_lr(opt.lr, epoch, opt.decay_epochs));
    for (int k = 0; k < opt.steps_per_epoch; ++k, ++step) {
      std::vector<video::GopClip> clips;
      for (int b = 0; b < opt.batch; ++b)
        clips.push_back(source(static_cast<std::uint64_t>(step) * opt.batch + b));
      std::vector<const video::GopClip*> ptrs;
      for (const auto& c : clips) ptrs.push_back(&c);
      ps.zero_grad();
      auto losses = training_objective(ps, cfg, ptrs, BinarizeMode::Train,
                                       opt.seed * 1000003ull + static_cast<std::uint64_t>(step), opt);
      const double total = losses.total.item();
      if (!std::isfinite(total)) throw StateError("non-finite loss at step " + std::to_string(step));
      tensor::backward(losses.total);
      adam.step(ps);
      if (!ps.all_finite()) throw StateError("non-finite parameters after step " + std::to_string(step));
      res.log.push_back({step, adam.lr(), losses.l_r, losses.l_b, losses.l_f, total});
    }
    const double v = validation.empty() ? res.log.back().l_r : validation_loss(ps, cfg, validation);
    res.validation.push_back(v);
    if (v < res.best_validation) {
      res.best_validation = v;
      res.best = ps.clone();
      if (!opt.checkpoint.empty()) save_model(opt.checkpoint, res.best, cfg);
    }
  }
  if (res.best.size() == 0) res.best = ps.clone();
  res.last = std::move(ps);
  if (!opt.log.empty()) write_text_atomic(opt.log, format_train_log(res.log));
  return res;
}

}  // namespace motionlab::net
