#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "motionlab/dba/bit_assign.hpp"

using namespace motionlab;
using namespace motionlab::dba;
using tensor::Shape5;
using tensor::Tensor;

namespace {

// Band test written out independently of the library.
double band_oracle(int c, double b, int c_bnd, int levels) {
  const double g = std::ceil(static_cast<double>(c) * levels / c_bnd);
  return (levels * b - 1.0 <= g && g <= levels * b + 2.0) ? levels : 0.0;
}

int ones_at(const Tensor<double>& mask, std::int64_t site) {
  const auto s = mask.shape();
  int n = 0;
  for (std::int64_t c = 0; c < s.c(); ++c) n += mask.values()[c * s.volume() + site] == 1.0;
  return n;
}

}  // namespace

TEST(Quantize, Examples) {
  EXPECT_EQ(quantize_level(0.5, 8), 4);
  EXPECT_EQ(quantize_level(0.999999, 4), 3);
  EXPECT_EQ(quantize_level(0.49, 2), 0);
  EXPECT_EQ(quantize_level(1e-6, 8), 0);
  const std::vector<float> map{0.1f, 0.26f, 0.74f, 0.99f};
  EXPECT_EQ(quantize_importance<float>(map, 4), (std::vector<int>{0, 1, 2, 3}));
}

TEST(Levels, Validation) {
  EXPECT_NO_THROW(validate_levels(8, 8));
  EXPECT_NO_THROW(validate_levels(16, 4));
  EXPECT_THROW(validate_levels(8, 3), ConfigError);
  EXPECT_THROW(validate_levels(4, 8), ConfigError);
  EXPECT_THROW(validate_levels(8, 0), ConfigError);
}

TEST(Mask, ForwardExample) {
  const auto map = Tensor<double>::from({1, 1, 1, 1, 1}, {0.6});
  const auto m = build_mask(map, 8, 4);
  EXPECT_EQ(m.shape(), (Shape5{1, 8, 1, 1, 1}));
  const std::vector<double> expect{1, 1, 1, 1, 0, 0, 0, 0};
  EXPECT_EQ(std::vector<double>(m.values().begin(), m.values().end()), expect);
}

TEST(Mask, DerivativeExamples) {
  EXPECT_EQ(mask_derivative(5, 0.6, 8, 4), 4.0);
  EXPECT_EQ(mask_derivative(8, 0.6, 8, 4), 4.0);
  EXPECT_EQ(mask_derivative(8, 0.2, 8, 4), 0.0);
}

class MaskBackward : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(MaskBackward, MatchesBandFormulaOnGrid) {
  const auto [c_bnd, levels] = GetParam();
  std::vector<double> b(99);
  for (int k = 0; k < 99; ++k) b[k] = (k + 1) / 100.0;
  for (int c = 1; c <= c_bnd; ++c) {
    auto map = Tensor<double>::from({1, 1, 1, 1, 99}, b, true);
    std::vector<double> sel(static_cast<std::size_t>(c_bnd) * 99, 0.0);
    for (int k = 0; k < 99; ++k) sel[(c - 1) * 99 + k] = 1.0;
    const auto pick = Tensor<double>::from({1, c_bnd, 1, 1, 99}, sel);
    tensor::backward(tensor::sum(tensor::mul(build_mask(map, c_bnd, levels), pick)));
    for (int k = 0; k < 99; ++k)
      ASSERT_EQ(map.grad()[k], band_oracle(c, b[k], c_bnd, levels))
          << "c=" << c << " b=" << b[k];
  }
}

INSTANTIATE_TEST_SUITE_P(Configs, MaskBackward,
                         ::testing::Values(std::pair{8, 8}, std::pair{8, 4}, std::pair{8, 2},
                                           std::pair{16, 8}));

TEST(Mask, ChannelMonotoneAndOnesLaw) {
  std::mt19937_64 rng(3);
  std::vector<double> b(64);
  for (auto& v : b) v = 1e-6 + (1 - 2e-6) * net::unit_uniform(rng);
  const auto map = Tensor<double>::from({1, 1, 4, 4, 4}, b);
  const auto m = build_mask(map, 16, 4);
  for (std::int64_t i = 0; i < 64; ++i) {
    bool seen_zero = false;
    for (int c = 0; c < 16; ++c) {
      const double v = m.values()[c * 64 + i];
      if (v == 0.0) seen_zero = true;
      else EXPECT_FALSE(seen_zero);
    }
    EXPECT_EQ(ones_at(m, i), 4 * quantize_level(b[i], 4));
  }
}

TEST(Mask, OnesCountMonotoneInImportance) {
  for (auto [c_bnd, levels] : {std::pair{8, 8}, std::pair{16, 4}, std::pair{8, 2}}) {
    int prev = 0;
    for (int k = 1; k < 1000; ++k) {
      const auto m = build_mask(Tensor<double>::from({1, 1, 1, 1, 1}, {k / 1000.0}), c_bnd, levels);
      const int n = ones_at(m, 0);
      EXPECT_GE(n, prev);
      prev = n;
    }
    EXPECT_EQ(prev, c_bnd - c_bnd / levels);
  }
}

TEST(RateLoss, Examples) {
  EXPECT_DOUBLE_EQ(rate_loss(Tensor<double>::full({1, 1, 3, 8, 8}, 0.5)).item(), 96.0);
  EXPECT_NEAR(rate_loss(Tensor<double>::full({1, 1, 3, 8, 8}, 1e-9)).item(), 0.0, 1e-6);
  std::mt19937_64 rng(8);
  std::vector<float> v(2 * 3 * 5 * 7);
  double oracle = 0;
  for (auto& x : v) {
    x = static_cast<float>(net::unit_uniform(rng));
    oracle += x;
  }
  const double got = rate_loss(Tensor<float>::from({2, 1, 3, 5, 7}, v)).item();
  EXPECT_NEAR(got, oracle, 1e-6 * oracle);
}

TEST(Importance, ZeroWeightsGiveHalf) {
  std::mt19937_64 rng(1);
  tensor::ParamSet<double> ps;
  add_importance_params(ps, 6, 4, rng);
  for (auto& [_, t] : ps)
    for (auto& v : t.mutable_values()) v = 0;
  const auto f = Tensor<double>::from({1, 6, 2, 3, 4}, std::vector<double>(144, 0.7));
  const auto b = importance_forward(f, ps);
  EXPECT_EQ(b.shape(), (Shape5{1, 1, 2, 3, 4}));
  for (double v : b.values()) EXPECT_EQ(v, 0.5);
}

TEST(Importance, RandomInputsStayInOpenInterval) {
  std::mt19937_64 rng(2);
  tensor::ParamSet<float> ps;
  add_importance_params(ps, 8, 8, rng);
  std::vector<float> x(8 * 3 * 4 * 4);
  for (auto& v : x) v = static_cast<float>(40 * (net::unit_uniform(rng) - 0.5));
  const auto b = importance_forward(Tensor<float>::from({1, 8, 3, 4, 4}, x), ps);
  EXPECT_EQ(b.shape(), (Shape5{1, 1, 3, 4, 4}));
  for (float v : b.values()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Importance, RateGradientReachesParameters) {
  std::mt19937_64 rng(4);
  tensor::ParamSet<double> ps;
  add_importance_params(ps, 4, 4, rng);
  std::vector<double> x(4 * 2 * 4 * 4);
  for (auto& v : x) v = 2 * net::unit_uniform(rng) - 1;
  const auto f = Tensor<double>::from({1, 4, 2, 4, 4}, x);
  const auto b = importance_forward(f, ps);
  // rate term plus a term through the mask, as in training
  std::vector<double> code(8 * 32);
  for (auto& v : code) v = net::unit_uniform(rng);
  const auto masked = tensor::mul(build_mask(b, 8, 4), Tensor<double>::from({1, 8, 2, 4, 4}, code));
  tensor::backward(tensor::add(tensor::scale(rate_loss(b), 1e-2), tensor::sum(masked)));
  for (const auto& [name, t] : ps) {
    ASSERT_TRUE(t.has_grad()) << name;
    double norm = 0;
    for (double g : t.grad()) norm += g * g;
    EXPECT_GT(norm, 0.0) << name;
  }
}

TEST(Pack, HandExample) {
  const CodeDims d{8, 1, 1, 1};
  const std::vector<float> code{1, -1, 1, -1, 1, -1, 1, -1};
  const std::vector<int> q{3};
  const auto bits = pack_code<float>(code, q, d, 8);
  EXPECT_EQ(bits, (bitstream::Bits{0, 1, 1, 1, 0, 1}));  // prefix 011, payload 101
  EXPECT_EQ(transmitted_bits(q, d, 8), 6u);
}

TEST(Pack, FullMaskingLeavesOnlyPrefix) {
  const CodeDims d{8, 2, 3, 4};
  const std::vector<float> code(d.size(), 1.0f);
  const std::vector<int> q(d.sites(), 0);
  const auto bits = pack_code<float>(code, q, d, 4);
  EXPECT_EQ(bits.size(), d.sites() * 2);
  for (auto b : bits) EXPECT_EQ(b, 0);
}

TEST(Pack, ZeroPayloadWithTopLevelDecodesToMinusOne) {
  const CodeDims d{8, 1, 2, 2};
  const int levels = 4;
  bitstream::BitWriter w;
  for (std::size_t i = 0; i < d.sites(); ++i) w.put(levels - 1, 2);
  for (std::size_t i = 0; i < d.sites() * 6; ++i) w.put_bit(false);
  const auto u = unpack_code(w.bits(), d, levels);
  for (std::size_t i = 0; i < d.sites(); ++i)
    for (int c = 0; c < 8; ++c) EXPECT_EQ(u.code[c * d.sites() + i], c < 6 ? -1.0f : 0.0f);
}

TEST(Pack, Errors) {
  const CodeDims d{8, 1, 1, 2};
  const std::vector<float> code(16, 1.0f);
  EXPECT_THROW(pack_code<float>(std::vector<float>(15, 1.0f), std::vector<int>{1, 1}, d, 4),
               ShapeError);
  EXPECT_THROW(pack_code<float>(code, std::vector<int>{1}, d, 4), ShapeError);
  std::vector<float> bad = code;
  bad[0] = 0.3f;
  EXPECT_THROW(pack_code<float>(bad, std::vector<int>{1, 1}, d, 4), DomainError);
  // prefix declares 2 * 6 payload bits, only 5 follow
  bitstream::Bits short_bits{1, 1, 1, 1, 0, 0, 0, 0, 0};
  try {
    unpack_code(short_bits, d, 4);
    FAIL() << "expected truncation";
  } catch (const TruncationError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 16 bits, got 9"), std::string::npos);
  }
}

class PackRoundTrip : public ::testing::TestWithParam<unsigned> {};

TEST_P(PackRoundTrip, BitLawAndExactMaskedCode) {
  std::mt19937_64 rng(GetParam());
  const std::pair<int, int> configs[] = {{8, 8}, {8, 4}, {16, 8}, {16, 2}, {4, 4}, {8, 1}};
  const auto [c_bnd, levels] = configs[GetParam() % 6];
  const CodeDims d{c_bnd, 1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 5),
                   1 + static_cast<int>(rng() % 6)};
  std::vector<double> map(d.sites());
  for (auto& v : map) v = 1e-6 + (1 - 2e-6) * net::unit_uniform(rng);
  const auto q = quantize_importance<double>(map, levels);
  std::vector<float> code(d.size());
  for (auto& v : code) v = (rng() & 1u) ? 1.0f : -1.0f;
  const auto mask = build_mask(Tensor<double>::from({1, 1, d.t, d.h, d.w}, map), c_bnd, levels);
  std::vector<float> masked(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) masked[i] = code[i] * static_cast<float>(mask.values()[i]);
  // masked entries of the input may hold anything; only kept ones are read
  std::vector<float> input = code;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (mask.values()[i] == 0.0) input[i] = 0.0f;

  const auto bits = pack_code<float>(input, q, d, levels);
  std::size_t law = 0;
  for (int v : q) law += static_cast<std::size_t>(bitstream::ceil_log2(levels)) + (c_bnd / levels) * v;
  EXPECT_EQ(bits.size(), law);
  EXPECT_EQ(transmitted_bits(q, d, levels), law);
  const auto u = unpack_code(bits, d, levels);
  EXPECT_EQ(u.code, masked);
  EXPECT_EQ(u.levels, q);

  const auto all = pack_code<float>(code, {}, d, 0);
  EXPECT_EQ(all.size(), d.size());
  EXPECT_EQ(unpack_code(all, d, 0).code, code);
}

INSTANTIATE_TEST_SUITE_P(Seeds, PackRoundTrip, ::testing::Range(0u, 24u));
