#include <gtest/gtest.h>

#include "guidepaint/losses.hpp"
#include "test_util.hpp"

namespace gp = guidepaint;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

gp::TensorT<double> from_vec(const std::vector<double>& v, gp::Shape shape) {
  gp::TensorT<double> t(std::move(shape));
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

std::vector<double> to_vec(const gp::TensorT<double>& t) {
  return std::vector<double>(t.data(), t.data() + t.numel());
}

}  // namespace

TEST(Grayscale, KnownPixels) {
  gp::Tensor white = gp::Tensor::full({3, 1, 1}, 1.0f);
  EXPECT_FLOAT_EQ(gp::grayscale(white)[0], 1.0f);

  gp::Tensor red({3, 1, 1});
  red[0] = 1.0f;
  EXPECT_FLOAT_EQ(gp::grayscale(red)[0], 0.299f);

  // R=G=B maps to exactly R
  gp::Tensor gray = gp::Tensor::full({3, 2, 2}, 0.3137f);
  gp::Tensor out = gp::grayscale(gray);
  for (int64_t i = 0; i < 4; ++i) EXPECT_EQ(out[i], 0.3137f);

  gp::Tensor wrong({2, 2, 2});
  EXPECT_THROW(gp::grayscale(wrong), gp::ShapeError);
}

TEST(Grayscale, Linearity) {
  gp::TensorT<double> y1 = testutil::random_tensor<double>({3, 5, 5}, 1);
  gp::TensorT<double> y2 = testutil::random_tensor<double>({3, 5, 5}, 2);
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    gp::TensorT<double> mix({3, 5, 5});
    for (int64_t i = 0; i < mix.numel(); ++i) mix[i] = a * y1[i] + (1 - a) * y2[i];
    gp::TensorT<double> lhs = gp::grayscale(mix);
    gp::TensorT<double> g1 = gp::grayscale(y1);
    gp::TensorT<double> g2 = gp::grayscale(y2);
    for (int64_t i = 0; i < lhs.numel(); ++i)
      EXPECT_NEAR(lhs[i], a * g1[i] + (1 - a) * g2[i], 1e-12);
  }
}

TEST(L1Composite, PerfectPredictionIsZero) {
  gp::TensorT<double> y = testutil::random_tensor<double>({3, 4, 4}, 3);
  gp::GeneratorOutputT<double> out;
  out.g_f = y.clone();
  out.g_g1 = gp::grayscale(y);
  out.g_g2 = y.clone();
  gp::L1Terms r = gp::l1_composite(out, y, gp::LossWeights{}, true);
  EXPECT_DOUBLE_EQ(r.total, 0.0);
  EXPECT_DOUBLE_EQ(r.f, 0.0);
  EXPECT_DOUBLE_EQ(r.g1, 0.0);
  EXPECT_DOUBLE_EQ(r.g2, 0.0);
}

TEST(L1Composite, SinglePixelHandArithmetic) {
  // y = 0.5 on all channels, G_f = 0.5, G_g1 = 0.5, G_g2 = 0.7:
  // total = 0 + 0.3*0 + 0.9*0.2 = 0.18
  gp::TensorT<double> y = gp::TensorT<double>::full({3, 1, 1}, 0.5);
  gp::GeneratorOutputT<double> out;
  out.g_f = gp::TensorT<double>::full({3, 1, 1}, 0.5);
  out.g_g1 = gp::TensorT<double>::full({1, 1, 1}, 0.5);
  out.g_g2 = gp::TensorT<double>::full({3, 1, 1}, 0.7);
  gp::L1Terms r = gp::l1_composite(out, y, gp::LossWeights{}, true);
  EXPECT_NEAR(r.total, 0.18, 1e-12);
  EXPECT_NEAR(r.g2, 0.2, 1e-12);
}

TEST(L1Composite, DegenerateWeightsReduceToPlainL1) {
  gp::TensorT<double> y = testutil::random_tensor<double>({3, 6, 6}, 4);
  gp::GeneratorOutputT<double> out;
  out.g_f = testutil::random_tensor<double>({3, 6, 6}, 5);
  out.g_g1 = testutil::random_tensor<double>({1, 6, 6}, 6);
  out.g_g2 = testutil::random_tensor<double>({3, 6, 6}, 7);
  gp::LossWeights w;
  w.alpha = 0;
  w.beta = 0;
  gp::L1Terms r = gp::l1_composite(out, y, w, true);
  EXPECT_NEAR(r.total, oracle::mean_abs_diff(to_vec(y), to_vec(out.g_f)), 1e-12);
}

TEST(L1Composite, GrayscaleFormEqualsPlainFormWithIdentityT) {
  // Eq. 2 with T = identity and a 3-channel guide-1 equals Eq. 1 exactly
  gp::TensorT<double> y = testutil::random_tensor<double>({3, 5, 5}, 8);
  gp::GeneratorOutputT<double> out;
  out.g_f = testutil::random_tensor<double>({3, 5, 5}, 9);
  out.g_g1 = testutil::random_tensor<double>({3, 5, 5}, 10);
  out.g_g2 = testutil::random_tensor<double>({3, 5, 5}, 11);
  gp::L1Terms graymode = gp::l1_composite(out, y, gp::LossWeights{}, false);
  oracle::L1Result plain =
      oracle::l1_composite(to_vec(out.g_f), to_vec(out.g_g1), to_vec(out.g_g2),
                           to_vec(y), 25, 0.3, 0.9, false);
  EXPECT_DOUBLE_EQ(graymode.total, plain.total);
}

TEST(L1Composite, ShapeMismatchRejected) {
  gp::GeneratorOutputT<double> out;
  out.g_f = gp::TensorT<double>({3, 4, 4});
  out.g_g1 = gp::TensorT<double>({1, 4, 4});
  out.g_g2 = gp::TensorT<double>({3, 4, 4});
  gp::TensorT<double> y({3, 5, 5});
  EXPECT_THROW(gp::l1_composite(out, y, gp::LossWeights{}, true), gp::ShapeError);
}

TEST(AcGanLoss, FrozenTwoCoordinateFixture) {
  // post-squash D_real = (0.6, 0.4), V = (0.5, 0.5), D_fake = (0.1, 0.2);
  // expected values frozen from the scalar oracle:
  //   d_loss = -( (log(min(1,1.1)) + log(0.9))/2 + (log(0.9) + log(0.8))/2 )
  //          = 0.21693229205689538
  //   g_loss = -(log(0.1) + log(0.2))/2 = 1.9560115027140728
  auto d_real = from_vec({logit(0.6), logit(0.4)}, {1, 2});
  auto d_fake = from_vec({logit(0.1), logit(0.2)}, {1, 2});
  auto v01 = from_vec({0.5, 0.5}, {1, 2});
  gp::GanLossValues got = gp::acgan_loss(d_real, d_fake, v01);
  EXPECT_NEAR(got.d_loss, 0.21693229205689538, 1e-9);
  EXPECT_NEAR(got.g_loss, 1.9560115027140728, 1e-9);
  // and the oracle agrees
  oracle::GanResult want = oracle::acgan({logit(0.6), logit(0.4)},
                                         {logit(0.1), logit(0.2)}, {0.5, 0.5});
  EXPECT_NEAR(got.d_loss, want.d_loss, 1e-12);
  EXPECT_NEAR(got.g_loss, want.g_loss, 1e-12);
}

TEST(AcGanLoss, OptimalOnFakesZeroesTheFakeTerm) {
  // strongly negative raw fake scores: sigmoid ~ 0, log(1 - 0) = 0, so the
  // loss reduces to the real-side term alone
  auto d_real = from_vec({logit(0.3), logit(0.7)}, {1, 2});
  auto d_fake = from_vec({-40.0, -40.0}, {1, 2});
  auto v01 = from_vec({0.6, 0.6}, {1, 2});
  gp::GanLossValues got = gp::acgan_loss(d_real, d_fake, v01);
  double real_term = (oracle::clamp_log(0.3 + 0.4) + oracle::clamp_log(0.7 + 0.4)) / 2;
  EXPECT_NEAR(got.d_loss, -real_term, 1e-9);
}

TEST(AcGanLoss, RealTermMaximalWhenScoresMatchStyleVector) {
  // D(y) = V(y) elementwise makes log(D + 1 - V) = log(1) = 0, the
  // maximum available under the clamp
  std::vector<double> v01 = {0.2, 0.5, 0.9};
  std::vector<double> raw(v01.size());
  for (size_t i = 0; i < v01.size(); ++i) raw[i] = logit(v01[i]);
  auto d_fake = from_vec({-40.0, -40.0, -40.0}, {1, 3});
  gp::GanLossValues matched =
      gp::acgan_loss(from_vec(raw, {1, 3}), d_fake, from_vec(v01, {1, 3}));
  EXPECT_NEAR(matched.d_loss, 0.0, 1e-9);
  // any perturbation downward makes it worse
  std::vector<double> worse = raw;
  worse[1] = logit(0.3);
  gp::GanLossValues perturbed =
      gp::acgan_loss(from_vec(worse, {1, 3}), d_fake, from_vec(v01, {1, 3}));
  EXPECT_GT(perturbed.d_loss, matched.d_loss);
}

TEST(AcGanLoss, MatchesOracleOnRandomFixtures) {
  gp::Rng rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    int64_t F = 1 + static_cast<int64_t>(rng.uniform_int(16));
    std::vector<double> dr, df, v;
    for (int64_t i = 0; i < F; ++i) {
      dr.push_back(rng.uniform(-4.0, 4.0));
      df.push_back(rng.uniform(-4.0, 4.0));
      v.push_back(rng.uniform(0.01, 0.99));
    }
    gp::GanLossValues got = gp::acgan_loss(from_vec(dr, {1, F}), from_vec(df, {1, F}),
                                           from_vec(v, {1, F}));
    oracle::GanResult want = oracle::acgan(dr, df, v);
    EXPECT_NEAR(got.d_loss, want.d_loss, 1e-9 * std::max(1.0, std::fabs(want.d_loss)));
    EXPECT_NEAR(got.g_loss, want.g_loss, 1e-9 * std::max(1.0, std::fabs(want.g_loss)));
    EXPECT_GE(got.d_loss, 0.0);
    EXPECT_GE(got.g_loss, 0.0);
  }
}

TEST(AcGanLoss, DimensionMismatchRejected) {
  auto d_real = from_vec({0.0, 0.0}, {1, 2});
  auto d_fake = from_vec({0.0, 0.0}, {1, 2});
  auto v01 = from_vec({0.5, 0.5, 0.5}, {1, 3});
  EXPECT_THROW(gp::acgan_loss(d_real, d_fake, v01), gp::ShapeError);
}

TEST(DcGanLoss, EquilibriumAndOptimum) {
  // D(real) = D(fake) = 0.5 -> d_loss = 2 log 2
  auto zero = from_vec({0.0}, {1, 1});
  gp::GanLossValues eq = gp::dcgan_loss(zero, zero);
  EXPECT_NEAR(eq.d_loss, 2.0 * std::log(2.0), 1e-9);

  // optimal discriminator: d_loss at the clamped minimum (0)
  auto real_hi = from_vec({40.0}, {1, 1});
  auto fake_lo = from_vec({-40.0}, {1, 1});
  gp::GanLossValues opt = gp::dcgan_loss(real_hi, fake_lo);
  EXPECT_NEAR(opt.d_loss, 0.0, 1e-9);
}

TEST(DcGanLoss, MatchesOracleOnRandomFixtures) {
  gp::Rng rng(321);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> dr = {rng.uniform(-5.0, 5.0)};
    std::vector<double> df = {rng.uniform(-5.0, 5.0)};
    gp::GanLossValues got = gp::dcgan_loss(from_vec(dr, {1, 1}), from_vec(df, {1, 1}));
    oracle::GanResult want = oracle::dcgan(dr, df);
    EXPECT_NEAR(got.d_loss, want.d_loss, 1e-9 * std::max(1.0, std::fabs(want.d_loss)));
    EXPECT_NEAR(got.g_loss, want.g_loss, 1e-9 * std::max(1.0, std::fabs(want.g_loss)));
  }
}

TEST(GeneratorObjective, HandArithmeticAndMonotonicity) {
  gp::LossWeights w;  // lambda = 100
  EXPECT_DOUBLE_EQ(gp::generator_objective(0.18, 0.7, w), 18.7);
  w.lambda = 0;
  EXPECT_DOUBLE_EQ(gp::generator_objective(0.18, 0.7, w), 0.7);
  w.lambda = 100;
  double base = gp::generator_objective(0.2, 0.5, w);
  EXPECT_GE(gp::generator_objective(0.21, 0.5, w), base);
  EXPECT_GE(gp::generator_objective(0.2, 0.51, w), base);
}

TEST(LossWeights, NegativeValuesRejected) {
  gp::LossWeights w;
  w.alpha = -0.1;
  EXPECT_THROW(w.validate(), gp::ConfigError);
  w = gp::LossWeights{};
  w.lambda = -1;
  EXPECT_THROW(w.validate(), gp::ConfigError);
}

TEST(SquashHint, SharesCodomainWithScores) {
  gp::StyleHintT<double> hint{testutil::random_tensor<double>({2, 8}, 50, -5.0, 5.0),
                              true};
  gp::TensorT<double> v = gp::squash_hint01(hint);
  for (int64_t i = 0; i < v.numel(); ++i) {
    EXPECT_GT(v[i], 0.0);
    EXPECT_LT(v[i], 1.0);
    EXPECT_NEAR(v[i], oracle::sigmoid(hint.values[i]), 1e-12);
  }
}
