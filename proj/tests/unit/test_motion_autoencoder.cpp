#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "motionlab/net/codec.hpp"
#include "motionlab/net/train.hpp"
#include "support/gradcheck.hpp"

using namespace motionlab;
using namespace motionlab::net;
using tensor::BinarizeMode;

namespace {

template <class T>
Tensor<T> random_tensor(Shape5 s, std::uint64_t seed, double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::vector<T> v(s.numel());
  for (auto& x : v) x = static_cast<T>(lo + (hi - lo) * unit_uniform(rng));
  return Tensor<T>::from(s, std::move(v));
}

// Smooth normalized clip so reconstruction targets are learnable.
video::GopClip smooth_clip(int frames, int w, int h, video::GopKind kind, double drift, double phase) {
  std::vector<video::Frame> fs;
  for (int t = 0; t < frames; ++t) {
    video::Frame f(w, h, 3);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double X = x + drift * t;
          f.at(c, y, x) = static_cast<float>(std::round(
              128 + 70 * std::sin(0.3 * X + phase + c) * std::cos(0.25 * y)));
        }
    fs.push_back(std::move(f));
  }
  return video::normalize(video::structure_gop(std::move(fs), kind));
}

NetConfig small_config(video::GopKind kind = video::GopKind::P) {
  NetConfig c;
  c.c_bnd = 8;
  c.width = 6;
  c.kind = kind;
  c.importance_width = 4;
  return c;
}

void zero_params(tensor::ParamSet<float>& ps, const std::string& prefix) {
  for (auto& [name, t] : ps)
    if (name.rfind(prefix, 0) == 0)
      for (auto& v : t.mutable_values()) v = 0;
}

}  // namespace

TEST(Multiscale, ShapeIsPreserved) {
  std::mt19937_64 rng(1);
  tensor::ParamSet<float> ps;
  add_multiscale_params(ps, "ms", 8, 24, rng);
  EXPECT_EQ(ps.at("ms.b0.w").shape().n(), 8);
  EXPECT_EQ(ps.at("ms.b1.w").shape().n(), 8);
  const auto y = multiscale_block(ps, "ms", random_tensor<float>({1, 8, 8, 16, 16}, 2));
  EXPECT_EQ(y.shape(), (Shape5{1, 24, 8, 16, 16}));
}

TEST(Multiscale, RemainderGoesToFirstBranch) {
  std::mt19937_64 rng(1);
  tensor::ParamSet<float> ps;
  add_multiscale_params(ps, "ms", 4, 8, rng);
  EXPECT_EQ(ps.at("ms.b0.w").shape().n(), 4);
  EXPECT_EQ(ps.at("ms.b1.w").shape().n(), 2);
  EXPECT_EQ(ps.at("ms.b2.w").shape().n(), 2);
}

TEST(Multiscale, ZeroFuseGivesZeros) {
  std::mt19937_64 rng(3);
  tensor::ParamSet<float> ps;
  add_multiscale_params(ps, "ms", 4, 6, rng);
  zero_params(ps, "ms.fuse");
  const auto y = multiscale_block(ps, "ms", random_tensor<float>({1, 4, 4, 8, 8}, 4));
  for (float v : y.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Multiscale, SpatialReceptiveFieldIsNine) {
  // Positive weights rule out cancellation; the input gradient of one output
  // sample then marks exactly its receptive field.
  auto extent = [](bool plain) {
    std::mt19937_64 rng(5);
    tensor::ParamSet<double> ps;
    add_multiscale_params(ps, "ms", 1, 3, rng);
    for (auto& [_, t] : ps)
      for (auto& v : t.mutable_values()) v = std::abs(v) + 0.1;
    auto x = Tensor<double>::full({1, 1, 3, 21, 21}, 1.0, true);
    Tensor<double> y;
    if (plain) {
      std::vector<Tensor<double>> br;
      for (int b = 0; b < 3; ++b) br.push_back(conv(ps, "ms.b" + std::to_string(b), x, same3()));
      y = conv(ps, "ms.fuse", tensor::concat_channels(br));
    } else {
      y = multiscale_block(ps, "ms", x);
    }
    std::vector<double> pick(y.numel(), 0.0);
    pick[1 * 21 * 21 + 10 * 21 + 10] = 1.0;
    tensor::backward(tensor::sum(tensor::mul(y, Tensor<double>::from(y.shape(), pick))));
    int lo = 21, hi = -1;
    for (int w = 0; w < 21; ++w)
      if (x.grad()[1 * 21 * 21 + 10 * 21 + w] != 0.0) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
    return hi - lo + 1;
  };
  EXPECT_EQ(extent(false), 9);
  EXPECT_EQ(extent(true), 3);
}

TEST(Encoder, CodeShapeAndValues) {
  NetConfig cfg = small_config();
  const auto ps = init_params<float>(cfg, 7);
  const auto x = random_tensor<float>({1, 3, 24, 64, 64}, 8);
  const auto e = encode_motion(ps, cfg, x, BinarizeMode::Eval, 0);
  EXPECT_EQ(e.code.shape(), (Shape5{1, 8, 3, 8, 8}));
  EXPECT_EQ(e.code.numel(), 1536u);
  for (float v : e.code.values()) EXPECT_TRUE(v == 1.0f || v == -1.0f);
  const auto again = encode_motion(ps, cfg, x, BinarizeMode::Eval, 99);
  EXPECT_TRUE(std::equal(e.code.values().begin(), e.code.values().end(), again.code.values().begin()));
  const auto train = encode_motion(ps, cfg, x, BinarizeMode::Train, 3);
  for (float v : train.code.values()) EXPECT_TRUE(v == 1.0f || v == -1.0f);
}

TEST(Encoder, UnpaddedClipIsRejected) {
  NetConfig cfg = small_config();
  const auto ps = init_params<float>(cfg, 7);
  EXPECT_THROW(encode_motion(ps, cfg, random_tensor<float>({1, 3, 17, 64, 64}, 1), BinarizeMode::Eval, 0),
               ShapeError);
  EXPECT_THROW(encode_motion(ps, cfg, random_tensor<float>({1, 3, 8, 60, 64}, 1), BinarizeMode::Eval, 0),
               ShapeError);
}

TEST(Encoder, BitAssignmentMasksChannels) {
  NetConfig cfg = small_config();
  cfg.dba = true;
  cfg.dba_levels = 4;
  const auto ps = init_params<float>(cfg, 9);
  const auto e = encode_motion(ps, cfg, random_tensor<float>({1, 3, 8, 32, 32}, 2), BinarizeMode::Eval, 0);
  EXPECT_EQ(e.importance.shape(), (Shape5{1, 1, 1, 4, 4}));
  EXPECT_EQ(e.mask.shape(), e.code.shape());
  for (std::size_t i = 0; i < e.code.numel(); ++i)
    EXPECT_EQ(e.transmitted.values()[i], e.code.values()[i] * e.mask.values()[i]);
}

TEST(Conditioning, PyramidHalvesResolution) {
  NetConfig cfg = small_config();
  const auto ps = init_params<float>(cfg, 1);
  const auto pyr = condition_features(ps, cfg, {random_tensor<float>({1, 3, 1, 64, 64}, 1)});
  ASSERT_EQ(pyr.size(), 1u);
  const int sizes[4] = {64, 32, 16, 8};
  for (int l = 0; l < 4; ++l) {
    EXPECT_EQ(pyr[0][l].shape().h(), sizes[l]);
    EXPECT_EQ(pyr[0][l].shape().w(), sizes[l]);
    EXPECT_EQ(pyr[0][l].shape().c(), cfg.cond_widths()[l]);
  }
}

TEST(Conditioning, ArityAndSeparateParameters) {
  NetConfig cfg = small_config(video::GopKind::B);
  const auto ps = init_params<float>(cfg, 1);
  EXPECT_THROW(condition_features(ps, cfg, {random_tensor<float>({1, 3, 1, 16, 16}, 1)}), ArityError);
  EXPECT_NE(ps.find("cond0.f0.w"), nullptr);
  EXPECT_NE(ps.find("condt.f0.w"), nullptr);
  const auto a = random_tensor<float>({1, 3, 1, 16, 16}, 2);
  const auto pyr = condition_features(ps, cfg, {a, a});
  ASSERT_EQ(pyr.size(), 2u);
  EXPECT_FALSE(std::equal(pyr[0][0].values().begin(), pyr[0][0].values().end(), pyr[1][0].values().begin()));
}

TEST(Conditioning, ZeroWeightsGiveZeroPyramids) {
  NetConfig cfg = small_config();
  auto ps = init_params<float>(cfg, 1);
  zero_params(ps, "cond0");
  const auto pyr = condition_features(ps, cfg, {random_tensor<float>({1, 3, 1, 16, 16}, 3)});
  for (const auto& level : pyr[0])
    for (float v : level.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Decoder, ShapesAndCrop) {
  NetConfig cfg = small_config();
  const auto ps = init_params<float>(cfg, 2);
  const auto code = random_tensor<float>({1, 8, 3, 8, 8}, 1);
  const auto pyr = condition_features(ps, cfg, {random_tensor<float>({1, 3, 1, 64, 64}, 2)});
  const auto all = decode_frames(ps, cfg, code, pyr, 0, 24);
  EXPECT_EQ(all.shape(), (Shape5{1, 3, 24, 64, 64}));
  for (float v : all.values()) {
    EXPECT_GT(v, -1.0f);
    EXPECT_LT(v, 1.0f);
  }
  const auto some = decode_frames(ps, cfg, code, pyr, 1, 16);
  EXPECT_EQ(some.shape(), (Shape5{1, 3, 16, 64, 64}));
  EXPECT_EQ(some.values()[0], all.values()[64 * 64]);
  EXPECT_THROW(decode_frames(ps, cfg, code, pyr, 10, 16), ShapeError);
  const auto wrong = condition_features(ps, cfg, {random_tensor<float>({1, 3, 1, 32, 32}, 2)});
  EXPECT_THROW(decode_frames(ps, cfg, code, wrong, 0, 8), ShapeError);
}

TEST(Decoder, ZeroCodeDependsOnlyOnIFrame) {
  NetConfig cfg = small_config();
  const auto ps = init_params<float>(cfg, 2);
  const auto zero = Tensor<float>::zeros({1, 8, 1, 4, 4});
  const auto i1 = random_tensor<float>({1, 3, 1, 32, 32}, 1), i2 = random_tensor<float>({1, 3, 1, 32, 32}, 2);
  const auto a = decode_frames(ps, cfg, zero, condition_features(ps, cfg, {i1}), 0, 8);
  const auto b = decode_frames(ps, cfg, zero, condition_features(ps, cfg, {i1}), 0, 8);
  const auto c = decode_frames(ps, cfg, zero, condition_features(ps, cfg, {i2}), 0, 8);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(Decoder, FullyConvolutional) {
  NetConfig cfg = small_config();
  const auto ps = init_params<float>(cfg, 4);
  const std::size_t before = ps.numel();
  for (int s : {32, 64}) {
    const auto x = random_tensor<float>({1, 3, 8, s, s}, 5);
    const auto e = encode_motion(ps, cfg, x, BinarizeMode::Eval, 0);
    const auto y = decode_frames(ps, cfg, e.code, condition_features(ps, cfg, {random_tensor<float>({1, 3, 1, s, s}, 6)}), 0, 8);
    EXPECT_EQ(y.shape(), (Shape5{1, 3, 8, s, s}));
  }
  EXPECT_EQ(ps.numel(), before);
}

TEST(Loss, ReconstructionExamples) {
  const auto a = random_tensor<double>({2, 3, 2, 5, 4}, 1);
  EXPECT_EQ(loss_reconstruction(a, a).item(), 0.0);
  std::vector<double> shifted(a.values().begin(), a.values().end());
  for (auto& v : shifted) v += 0.1;
  EXPECT_NEAR(loss_reconstruction(Tensor<double>::from(a.shape(), shifted), a).item(), 0.01, 1e-12);
  const auto b = random_tensor<double>({2, 3, 2, 5, 4}, 2);
  double oracle = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) oracle += std::pow(a.values()[i] - b.values()[i], 2);
  EXPECT_NEAR(loss_reconstruction(a, b).item(), oracle / a.numel(), 1e-6);
  EXPECT_THROW(loss_reconstruction(a, random_tensor<double>({1, 3, 2, 5, 4}, 2)), ShapeError);
}

TEST(Loss, FlowExamples) {
  auto g = motion::MotionField::zeros(40, 30, 10), p = motion::MotionField::zeros(40, 30, 10);
  EXPECT_EQ(loss_flow({g}, {g}, FlowDivergence::Epe), 0.0);
  EXPECT_EQ(loss_flow({g}, {g}, FlowDivergence::Cosine), 0.0);
  g.vectors[0] = {3, 4};
  const double expect = std::sqrt(std::pow(3.0 / 40, 2) + std::pow(4.0 / 30, 2)) / g.size();
  EXPECT_NEAR(loss_flow({p}, {g}, FlowDivergence::Epe), expect, 1e-12);
  auto a = motion::MotionField::zeros(16, 16, 16), b = a;
  a.vectors[0] = {1, 0};
  b.vectors[0] = {-1, 0};
  EXPECT_DOUBLE_EQ(loss_flow({b}, {a}, FlowDivergence::Cosine), 2.0);
  EXPECT_THROW(loss_flow({a}, {g}, FlowDivergence::Epe), ShapeError);
}

namespace {

// Texture moving by (dx, 0) per frame; frames 1..T in a (1,3,T,H,W) tensor.
std::vector<float> moving_texture(int frames, int first, int w, int h, double dx) {
  std::vector<float> v;
  for (int c = 0; c < 3; ++c)
    for (int t = first; t < first + frames; ++t)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double X = x + dx * t;
          v.push_back(static_cast<float>(0.3 * std::sin(0.7 * X) + 0.3 * std::cos(0.45 * y + 0.2 * X) +
                                         0.2 * std::sin(0.9 * y)));
        }
  return v;
}

}  // namespace

TEST(Loss, FlowLossValueAndDescent) {
  const int W = 32, H = 32, T = 3;
  const Shape5 s{1, 3, T, H, W};
  const auto target = Tensor<float>::from(s, moving_texture(T, 1, W, H, 2));
  const auto ref = Tensor<float>::from({1, 3, 1, H, W}, moving_texture(1, 0, W, H, 2));
  EXPECT_EQ(flow_loss_epe(target, target, ref, 7, 1.0).item(), 0.0f);

  // A frozen prediction: every frame repeats the reference.
  std::vector<float> still;
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < H * W; ++i) still.push_back(ref.values()[c * H * W + i]);
  auto pred = Tensor<float>::from(s, still, true);
  const double alpha = 0.5;
  const auto loss = flow_loss_epe(pred, target, ref, 7, alpha);
  // The prediction is still, so the value is the target flow's normalized length.
  auto luma = [&](const std::vector<float>& all, int t) {
    return video::Frame(W, H, 1, std::vector<float>(all.begin() + t * H * W, all.begin() + (t + 1) * H * W),
                        video::SampleDomain::Normalized);
  };
  const auto tv = moving_texture(T + 1, 0, W, H, 2);
  double expect = 0;
  for (int t = 0; t < T; ++t)
    for (const auto& m : motion::dense_flow(luma(tv, t), luma(tv, t + 1), 7).vectors)
      expect += std::hypot(static_cast<double>(m.dx) / W, static_cast<double>(m.dy) / H);
  EXPECT_GT(expect, 0.0);
  EXPECT_NEAR(loss.item(), alpha * expect, 1e-4);

  // Descending the surrogate moves the prediction's motion toward the target's.
  std::vector<float> v(still);
  const double start = loss.item();
  for (int it = 0; it < 60; ++it) {
    auto p = Tensor<float>::from(s, v, true);
    tensor::backward(flow_loss_epe(p, target, ref, 7, 1.0));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 2.0f * p.grad()[i];
  }
  const double end = flow_loss_epe(Tensor<float>::from(s, v), target, ref, 7, alpha).item();
  EXPECT_LT(end, 0.5 * start);
}

TEST(Training, ZeroLambdaIsReconstructionLoss) {
  NetConfig cfg = small_config();
  cfg.dba = true;
  cfg.dba_levels = 8;
  const auto ps = init_params<float>(cfg, 3);
  const auto clip = video::pad_clip(smooth_clip(9, 16, 16, video::GopKind::P, 1, 0), 8).clip;
  TrainOptions opt;
  opt.lambda = 0;
  const auto l = training_objective(ps, cfg, {&clip}, BinarizeMode::Eval, 0, opt);
  EXPECT_GT(l.l_b, 0.0);
  EXPECT_EQ(l.total.item(), l.l_r);
  opt.lambda = 1e-2;
  const auto m = training_objective(ps, cfg, {&clip}, BinarizeMode::Eval, 0, opt);
  EXPECT_NEAR(m.total.item(), m.l_r + 1e-2 * m.l_b, 1e-6);
}

TEST(Training, StaticSceneIsLearned) {
  NetConfig cfg = small_config();
  cfg.width = 8;
  cfg.c_bnd = 4;
  std::vector<video::Frame> frames(8, smooth_clip(1 + 1, 16, 16, video::GopKind::P, 0, 0.3).frames[0]);
  const auto clip = video::pad_clip(video::structure_gop(frames, video::GopKind::P), 8).clip;
  TrainOptions opt;
  opt.epochs = 1;
  opt.steps_per_epoch = 300;
  opt.batch = 1;
  opt.lr = 2e-3;
  opt.decay_epochs = {};
  const auto res = train(cfg, opt, [&](std::uint64_t) { return clip; }, {});
  ASSERT_EQ(res.log.size(), 300u);
  EXPECT_LT(res.log.back().l_r, 0.1 * res.log.front().l_r)
      << res.log.front().l_r << " -> " << res.log.back().l_r;
}

TEST(Training, DeterministicAndLogged) {
  NetConfig cfg = small_config();
  const auto clip = video::pad_clip(smooth_clip(9, 16, 16, video::GopKind::P, 1, 0), 8).clip;
  TrainOptions opt;
  opt.epochs = 2;
  opt.steps_per_epoch = 3;
  opt.batch = 2;
  opt.lr = 1e-3;
  const auto dir = std::filesystem::temp_directory_path() / "ae_train_test";
  std::filesystem::create_directories(dir);
  opt.checkpoint = dir / "best.ckpt";
  opt.log = dir / "log.csv";
  auto source = [&](std::uint64_t) { return clip; };
  const auto a = train(cfg, opt, source, {clip});
  const auto b = train(cfg, opt, source, {clip});
  ASSERT_EQ(a.log.size(), 6u);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].total, b.log[i].total);
  EXPECT_TRUE(std::filesystem::exists(opt.checkpoint));
  std::ifstream in(opt.log);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,lr,l_r,l_b,l_f,total");

  const auto loaded = load_model(opt.checkpoint);
  EXPECT_EQ(loaded.config.c_bnd, cfg.c_bnd);
  EXPECT_EQ(loaded.config.width, cfg.width);
  ASSERT_EQ(loaded.params.size(), a.best.size());
  for (const auto& [name, t] : a.best) {
    const auto& u = loaded.params.at(name);
    EXPECT_TRUE(std::equal(t.values().begin(), t.values().end(), u.values().begin())) << name;
  }
  std::filesystem::remove_all(dir);
}

TEST(Training, NonFiniteLossAbortsWithStep) {
  NetConfig cfg = small_config();
  auto init = init_params<float>(cfg, 1);
  init.find("dec.out.b")->mutable_values()[0] = std::nanf("");
  const auto clip = video::pad_clip(smooth_clip(9, 16, 16, video::GopKind::P, 1, 0), 8).clip;
  TrainOptions opt;
  opt.epochs = 1;
  opt.steps_per_epoch = 2;
  opt.batch = 1;
  try {
    train(cfg, opt, [&](std::uint64_t) { return clip; }, {}, init);
    FAIL() << "expected abort";
  } catch (const StateError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
  }
}

TEST(Gradient, FullModelMatchesFiniteDifferences) {
  for (auto kind : {video::GopKind::P, video::GopKind::B}) {
    NetConfig cfg = small_config(kind);
    cfg.c_bnd = 4;
    auto ps = init_params<double>(cfg, 11);
    const auto x = random_tensor<double>({1, 3, 8, 16, 16}, 12, -0.9, 0.9);
    const auto target = random_tensor<double>({1, 3, 6, 16, 16}, 13, -0.9, 0.9);
    std::vector<Tensor<double>> iframes{tensor::slice_time(x, 0, 1)};
    if (kind == video::GopKind::B) iframes.push_back(tensor::slice_time(x, 7, 1));
    auto loss = [&] {
      const auto e = encode_motion(ps, cfg, x, BinarizeMode::Relaxed, 0);
      const auto pyr = condition_features(ps, cfg, iframes);
      return loss_reconstruction(decode_frames(ps, cfg, e.transmitted, pyr, 1, 6), target);
    };
    // 50 parameters sampled across the model
    std::vector<Tensor<double>> inputs;
    for (auto& [_, t] : ps) inputs.push_back(t);
    std::mt19937_64 rng(kind == video::GopKind::P ? 1 : 2);
    std::vector<Tensor<double>> picked;
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < 25; ++i) picked.push_back(inputs[order[i % order.size()]]);
    const auto r = motionlab::testing::gradcheck(loss, picked, 1e-5, 1e-9, 2, 17);
    EXPECT_EQ(r.checked, 50u);
    EXPECT_LT(r.worst_rel, 1e-2) << r.worst_where;
  }
}

TEST(Codec, RoundTripThroughContainer) {
  for (bool dba : {false, true}) {
    NetConfig cfg = small_config(video::GopKind::B);
    cfg.dba = dba;
    cfg.dba_levels = 4;
    const auto ps = init_params<float>(cfg, 21);
    auto clip = video::denormalize(smooth_clip(10, 20, 12, video::GopKind::B, 1, 0.5));
    const auto pred = predict_clip(ps, cfg, clip);
    ASSERT_EQ(pred.frames.size(), 8u);
    EXPECT_EQ(pred.frames[0].width(), 20);
    EXPECT_EQ(pred.frames[0].height(), 12);
    const auto coded = to_coded(pred, cfg, clip);
    EXPECT_EQ(coded.levels, dba ? 4 : 0);
    EXPECT_EQ(coded.payload.size(), dba ? dba::transmitted_bits(pred.levels, pred.dims, 4) : pred.dims.size());
    const auto bytes = bitstream::encode_container(coded);
    const auto back = bitstream::decode_container(bytes);
    const auto frames = decode_clip(ps, cfg, back, {clip.frames.front(), clip.frames.back()});
    ASSERT_EQ(frames.size(), pred.frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i)
      EXPECT_TRUE(std::equal(frames[i].data().begin(), frames[i].data().end(), pred.frames[i].data().begin()));
  }
}

TEST(Codec, EvalIndependentOfWorkerCount) {
  NetConfig cfg = small_config();
  const auto ps = init_params<float>(cfg, 5);
  const auto clip = video::denormalize(smooth_clip(9, 32, 32, video::GopKind::P, 2, 0.1));
  setenv("MOTIONLAB_THREADS", "1", 1);
  const auto a = encode_clip(ps, cfg, clip);
  const auto fa = predict_clip(ps, cfg, clip).frames;
  setenv("MOTIONLAB_THREADS", "3", 1);
  const auto b = encode_clip(ps, cfg, clip);
  const auto fb = predict_clip(ps, cfg, clip).frames;
  unsetenv("MOTIONLAB_THREADS");
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < fa.size(); ++i)
    EXPECT_TRUE(std::equal(fa[i].data().begin(), fa[i].data().end(), fb[i].data().begin()));
}

TEST(Checkpoint, ModelRoundTripAndStructureCheck) {
  NetConfig cfg = small_config(video::GopKind::B);
  cfg.dba = true;
  cfg.dba_levels = 2;
  const auto ps = init_params<float>(cfg, 31);
  const auto path = std::filesystem::temp_directory_path() / "ae_model_test.ckpt";
  save_model(path, ps, cfg);
  const auto m = load_model(path);
  EXPECT_EQ(m.config.kind, video::GopKind::B);
  EXPECT_TRUE(m.config.dba);
  EXPECT_EQ(m.config.dba_levels, 2);
  for (const auto& [name, t] : ps)
    EXPECT_TRUE(std::equal(t.values().begin(), t.values().end(), m.params.at(name).values().begin()));
  auto entries = tensor::load_checkpoint(path);
  entries.erase(entries.begin());
  EXPECT_THROW(model_from_entries(entries), FormatError);
  std::filesystem::remove(path);
}
