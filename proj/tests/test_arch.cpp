#include <gtest/gtest.h>

#include <set>

#include "guidepaint/adam.hpp"
#include "guidepaint/discriminator.hpp"
#include "guidepaint/generator.hpp"
#include "test_util.hpp"

namespace gp = guidepaint;
using gp::GeneratorConfig;
using gp::HintMode;

namespace {

// Independent layer-by-layer shape enumeration. Lists every weight/bias
// shape the documented architecture implies, without touching the builder.
int64_t enumerate_generator_params(const GeneratorConfig& cfg) {
  int64_t total = 0;
  auto conv = [&](int64_t in, int64_t out) { total += out * in * 9 + out; };
  auto dense = [&](int64_t in, int64_t out) { total += out * in + out; };

  int64_t prev = cfg.in_channels;
  for (int i = 0; i < cfg.depth; ++i) {
    int64_t ch = cfg.base_channels << i;
    conv(prev, ch);  // conv_a, stride 1
    conv(ch, ch);    // conv_b, stride 2
    prev = ch;
  }
  int64_t mid = cfg.base_channels << (cfg.depth - 1);
  if (cfg.use_hint) {
    int64_t proj = cfg.resolved_hint_proj_dim();
    dense(cfg.hint_dim, proj);
    if (cfg.hint_mode == HintMode::kBroadcastConcat) conv(mid + proj, mid);
  }
  for (int b = 0; b < cfg.mid_blocks; ++b) {
    conv(mid, mid);
    conv(mid, mid);
  }
  prev = mid;
  for (int j = cfg.depth - 1; j >= 0; --j) {
    int64_t ch = cfg.base_channels << j;
    conv(prev, ch);
    conv(cfg.skips_enabled ? 2 * ch : ch, ch);
    prev = ch;
  }
  conv(cfg.base_channels, cfg.out_channels);
  if (cfg.guide_decoders_enabled) {
    for (int64_t out_ch : {cfg.guide1_channels(), cfg.out_channels}) {
      int64_t gprev = mid;
      for (int j = cfg.depth - 1; j >= 0; --j) {
        int64_t ch = cfg.guide_channels_at(j);
        conv(gprev, ch);
        gprev = ch;
      }
      conv(cfg.guide_channels_at(0), out_ch);
    }
  }
  return total;
}

GeneratorConfig small_cfg() {
  GeneratorConfig cfg;
  cfg.input_size = 16;
  cfg.base_channels = 4;
  cfg.depth = 2;
  cfg.mid_blocks = 2;
  cfg.hint_dim = 8;
  return cfg;
}

}  // namespace

TEST(GeneratorConfig, InvariantViolationsAreNamed) {
  GeneratorConfig cfg;
  cfg.input_size = 48;
  cfg.depth = 4;
  EXPECT_THROW(gp::build_generator(cfg, 1), gp::ConfigError);

  cfg = GeneratorConfig{};
  cfg.depth = 1;
  EXPECT_THROW(gp::build_generator(cfg, 1), gp::ConfigError);

  cfg = GeneratorConfig{};
  cfg.mid_blocks = 0;
  EXPECT_THROW(gp::build_generator(cfg, 1), gp::ConfigError);

  cfg = GeneratorConfig{};
  cfg.hint_dim = 0;
  EXPECT_THROW(gp::build_generator(cfg, 1), gp::ConfigError);

  cfg = GeneratorConfig{};
  cfg.hint_mode = HintMode::kAddAfterProjection;
  cfg.hint_proj_dim = 7;  // != mid channels
  try {
    gp::build_generator(cfg, 1);
    FAIL() << "expected ConfigError";
  } catch (const gp::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hint_proj_dim"), std::string::npos);
  }
}

TEST(GeneratorConfig, DeepestFeatureMap) {
  GeneratorConfig cfg;  // 64, depth 4
  EXPECT_EQ(cfg.deepest_size(), 4);
}

TEST(Generator, ParamCountMatchesShapeEnumeration) {
  std::vector<GeneratorConfig> cfgs;
  cfgs.push_back(GeneratorConfig{});  // defaults: base 16, depth 4, mid 4
  GeneratorConfig c2 = small_cfg();
  cfgs.push_back(c2);
  c2.hint_mode = HintMode::kAddAfterProjection;
  c2.hint_proj_dim = 0;
  cfgs.push_back(c2);
  GeneratorConfig c3 = small_cfg();
  c3.guide_decoders_enabled = false;
  c3.use_hint = false;
  c3.in_channels = 3;
  cfgs.push_back(c3);
  GeneratorConfig c4 = small_cfg();
  c4.skips_enabled = false;
  c4.guide1_grayscale = false;
  cfgs.push_back(c4);

  for (const auto& cfg : cfgs) {
    auto net = gp::build_generator(cfg, 7);
    EXPECT_EQ(net->parameter_count(), enumerate_generator_params(cfg));
  }
}

TEST(Generator, DeterministicBuildAndForward) {
  GeneratorConfig cfg = small_cfg();
  auto a = gp::build_generator(cfg, 99);
  auto b = gp::build_generator(cfg, 99);
  ASSERT_EQ(a->params().size(), b->params().size());
  for (size_t i = 0; i < a->params().size(); ++i)
    EXPECT_TRUE(a->params()[i]->value.equals(b->params()[i]->value));
  EXPECT_NE(gp::params_hash(a->params()),
            gp::params_hash(gp::build_generator(cfg, 100)->params()));

  gp::Tensor sketch = testutil::random_tensor<float>({2, 1, 16, 16}, 5);
  gp::Tensor hint = testutil::random_tensor<float>({2, 8}, 6, -1.f, 1.f);
  auto oa = a->evaluate(sketch, hint);
  auto ob = b->evaluate(sketch, hint);
  EXPECT_TRUE(oa.g_f.equals(ob.g_f));
  EXPECT_TRUE(oa.g_g1.equals(ob.g_g1));
  EXPECT_TRUE(oa.g_g2.equals(ob.g_g2));
}

TEST(Generator, OutputShapesAndRange) {
  GeneratorConfig cfg = small_cfg();
  auto net = gp::build_generator(cfg, 3);
  for (uint64_t trial = 0; trial < 100; ++trial) {
    gp::Tensor sketch = testutil::random_tensor<float>({1, 1, 16, 16}, 1000 + trial);
    gp::Tensor hint =
        testutil::random_tensor<float>({1, 8}, 2000 + trial, -3.f, 3.f);
    auto out = net->evaluate(sketch, hint);
    ASSERT_EQ(out.g_f.shape(), (gp::Shape{1, 3, 16, 16}));
    ASSERT_EQ(out.g_g1.shape(), (gp::Shape{1, 1, 16, 16}));  // grayscale guide
    ASSERT_EQ(out.g_g2.shape(), (gp::Shape{1, 3, 16, 16}));
    for (const auto* t : {&out.g_f, &out.g_g1, &out.g_g2}) {
      EXPECT_GE(t->min(), 0.0f);
      EXPECT_LE(t->max(), 1.0f);
    }
  }
}

TEST(Generator, ResolutionPreservedAcrossConfigGrid) {
  for (int depth : {2, 3, 4}) {
    for (int64_t base : {4, 8}) {
      for (int64_t size : {16, 32, 64}) {
        GeneratorConfig cfg;
        cfg.depth = depth;
        cfg.base_channels = base;
        cfg.input_size = size;
        cfg.hint_dim = 8;
        cfg.mid_blocks = 1;
        auto net = gp::build_generator(cfg, 1);
        gp::Tensor sketch = testutil::random_tensor<float>({1, 1, size, size}, 2);
        gp::Tensor hint = testutil::random_tensor<float>({1, 8}, 3);
        auto out = net->evaluate(sketch, hint);
        EXPECT_EQ(out.g_f.dim(2), size);
        EXPECT_EQ(out.g_f.dim(3), size);
        EXPECT_EQ(out.g_g1.dim(2), size);
        EXPECT_EQ(out.g_g2.dim(3), size);
      }
    }
  }
}

TEST(Generator, Guide1IsHintInvariantAndFinalIsNot) {
  GeneratorConfig cfg = small_cfg();
  auto net = gp::build_generator(cfg, 11);
  gp::Tensor sketch = testutil::random_tensor<float>({1, 1, 16, 16}, 21);
  for (uint64_t trial = 0; trial < 100; ++trial) {
    gp::Tensor h1 = testutil::random_tensor<float>({1, 8}, 300 + trial, -2.f, 2.f);
    gp::Tensor h2 = testutil::random_tensor<float>({1, 8}, 700 + trial, -2.f, 2.f);
    auto o1 = net->evaluate(sketch, h1);
    auto o2 = net->evaluate(sketch, h2);
    ASSERT_TRUE(o1.g_g1.equals(o2.g_g1));  // exact equality
    EXPECT_FALSE(o1.g_f.equals(o2.g_f));
  }
}

TEST(Generator, ParameterGroupsPartitionTheNetwork) {
  GeneratorConfig cfg;  // defaults with guides + hint
  auto net = gp::build_generator(cfg, 13);
  std::set<gp::ParamGroup> expected = {
      gp::ParamGroup::kEncoder, gp::ParamGroup::kMid,    gp::ParamGroup::kDecoder,
      gp::ParamGroup::kGuide1,  gp::ParamGroup::kGuide2, gp::ParamGroup::kHintProj};
  std::map<gp::ParamGroup, int64_t> counts;
  std::set<const gp::Param<float>*> seen;
  for (const auto* p : net->params()) {
    EXPECT_TRUE(expected.count(p->group)) << "unexpected group for " << p->name;
    counts[p->group] += p->value.numel();
    EXPECT_TRUE(seen.insert(p).second) << "parameter listed twice: " << p->name;
  }
  int64_t total = 0;
  for (auto g : expected) {
    EXPECT_GT(counts[g], 0) << gp::param_group_name(g) << " group is empty";
    total += counts[g];
  }
  EXPECT_EQ(total, net->parameter_count());
}

TEST(Generator, InjectHintContracts) {
  // add mode: all-zero hint leaves mid features unchanged (zero-init bias)
  GeneratorConfig cfg = small_cfg();
  cfg.hint_mode = HintMode::kAddAfterProjection;
  auto net = gp::build_generator(cfg, 5);
  gp::Tape<float> tape;
  net->set_trainable(false);
  int mid = tape.input(testutil::random_tensor<float>({1, 8, 4, 4}, 40));
  int zero_hint = tape.input(gp::Tensor({1, 8}));
  int injected = net->inject(tape, mid, zero_hint);
  EXPECT_TRUE(tape.value(injected).equals(tape.value(mid)));

  // concat mode: channels extend, broadcast block constant over space
  GeneratorConfig ccfg = small_cfg();
  ccfg.hint_proj_dim = 8;
  auto cnet = gp::build_generator(ccfg, 5);
  gp::Tape<float> t2;
  cnet->set_trainable(false);
  int mid2 = t2.input(testutil::random_tensor<float>({1, 8, 4, 4}, 41));
  int hint2 = t2.input(testutil::random_tensor<float>({1, 8}, 42, -1.f, 1.f));
  int inj2 = cnet->inject(t2, mid2, hint2);
  const gp::Tensor& out = t2.value(inj2);
  ASSERT_EQ(out.shape(), (gp::Shape{1, 16, 4, 4}));
  for (int64_t c = 8; c < 16; ++c)
    for (int64_t i = 0; i < 16; ++i)
      EXPECT_EQ(out.at(0, c, i / 4, i % 4), out.at(0, c, 0, 0));

  // two hints differing in one coordinate differ only in that broadcast
  // channel (identity projection)
  GeneratorConfig icfg = small_cfg();
  icfg.hint_proj_dim = 8;
  auto inet = gp::build_generator(icfg, 5);
  // overwrite the projection with the identity so channels map 1:1
  for (auto* p : inet->params()) {
    if (p->name == "hint_proj.weight") {
      p->value.zero();
      for (int64_t i = 0; i < 8; ++i) p->value.at(i, i) = 1.0f;
    }
  }
  gp::Tape<float> t3;
  inet->set_trainable(false);
  int mid3 = t3.input(testutil::random_tensor<float>({1, 8, 4, 4}, 43));
  gp::Tensor ha = testutil::random_tensor<float>({1, 8}, 44, -1.f, 1.f);
  gp::Tensor hb = ha.clone();
  hb.at(0, 3) += 0.5f;
  int ia = inet->inject(t3, mid3, t3.input(ha));
  int ib = inet->inject(t3, mid3, t3.input(hb));
  const gp::Tensor&va = t3.value(ia), &vb = t3.value(ib);
  for (int64_t c = 0; c < 16; ++c)
    for (int64_t i = 0; i < 16; ++i) {
      float a = va.at(0, c, i / 4, i % 4), b = vb.at(0, c, i / 4, i % 4);
      if (c == 8 + 3)
        EXPECT_NE(a, b);
      else
        EXPECT_EQ(a, b);
    }
}

TEST(Generator, RejectsWrongInputShapes) {
  auto net = gp::build_generator(small_cfg(), 1);
  gp::Tensor bad_size = testutil::random_tensor<float>({1, 1, 8, 8}, 1);
  gp::Tensor hint = testutil::random_tensor<float>({1, 8}, 2);
  EXPECT_THROW(net->evaluate(bad_size, hint), gp::ShapeError);
  gp::Tensor bad_hint = testutil::random_tensor<float>({1, 9}, 3);
  gp::Tensor sketch = testutil::random_tensor<float>({1, 1, 16, 16}, 4);
  EXPECT_THROW(net->evaluate(sketch, bad_hint), gp::ShapeError);
}

// ---- discriminator ----

TEST(Discriminator, HeadShapesAndDeterminism) {
  gp::DiscriminatorConfig cfg;
  cfg.input_size = 32;
  cfg.base_channels = 8;
  cfg.head_dim = 64;
  auto net = gp::build_discriminator(cfg, 4);
  gp::Tensor img = testutil::random_tensor<float>({2, 3, 32, 32}, 5);
  gp::Tensor ac = net->evaluate(img, gp::DiscVariant::kAcGan);
  EXPECT_EQ(ac.shape(), (gp::Shape{2, 64}));
  gp::Tensor dc = net->evaluate(img, gp::DiscVariant::kDcGan);
  EXPECT_EQ(dc.shape(), (gp::Shape{2, 1}));

  auto net2 = gp::build_discriminator(cfg, 4);
  for (size_t i = 0; i < net->params().size(); ++i)
    EXPECT_TRUE(net->params()[i]->value.equals(net2->params()[i]->value));

  gp::Tensor zero({1, 3, 32, 32});
  EXPECT_TRUE(net->evaluate(zero).all_finite());
}

TEST(Discriminator, BatchRowsMatchSingleForward) {
  gp::DiscriminatorConfig cfg;
  cfg.input_size = 16;
  cfg.base_channels = 4;
  cfg.head_dim = 16;
  auto net = gp::build_discriminator(cfg, 9);
  gp::Tensor batch = testutil::random_tensor<float>({3, 3, 16, 16}, 10);
  gp::Tensor scores = net->evaluate(batch, gp::DiscVariant::kAcGan);
  for (int64_t n = 0; n < 3; ++n) {
    gp::Tensor one({1, 3, 16, 16});
    std::copy(batch.data() + n * 768, batch.data() + (n + 1) * 768, one.data());
    gp::Tensor s1 = net->evaluate(one, gp::DiscVariant::kAcGan);
    for (int64_t f = 0; f < 16; ++f) EXPECT_EQ(s1.at(0, f), scores.at(n, f));
  }
}

TEST(Discriminator, ScoresMoveAfterOptimizerStep) {
  gp::DiscriminatorConfig cfg;
  cfg.input_size = 16;
  cfg.base_channels = 4;
  cfg.head_dim = 8;
  auto net = gp::build_discriminator(cfg, 2);
  gp::Tensor img = testutil::random_tensor<float>({1, 3, 16, 16}, 3);
  gp::Tensor before = net->evaluate(img, gp::DiscVariant::kDcGan);

  gp::Adam<float> opt(net->params(), {1e-3, 0.5, 0.999, 1e-8});
  opt.zero_grads();
  gp::Tape<float> tape;
  int out = net->forward(tape, tape.input(img), gp::DiscVariant::kDcGan);
  int loss = tape.mean_all(tape.mul(out, out));
  tape.backward(loss);
  opt.step();

  gp::Tensor after = net->evaluate(img, gp::DiscVariant::kDcGan);
  EXPECT_NE(before.at(0, 0), after.at(0, 0));
}
