#include <gtest/gtest.h>

#include "guidepaint/conv.hpp"
#include "guidepaint/tape.hpp"
#include "guidepaint/tensor.hpp"
#include "test_util.hpp"

namespace gp = guidepaint;
using gp::Shape;
using gp::TensorT;

TEST(Tensor, BasicShapeAndSharing) {
  gp::Tensor t({2, 3});
  EXPECT_EQ(t.numel(), 6);
  t.at(1, 2) = 5.0f;
  gp::Tensor alias = t;  // shallow
  EXPECT_EQ(alias.at(1, 2), 5.0f);
  gp::Tensor deep = t.clone();
  deep.at(1, 2) = 7.0f;
  EXPECT_EQ(t.at(1, 2), 5.0f);
  EXPECT_THROW(t.reshaped({4, 2}), gp::ShapeError);
  gp::Tensor r = t.reshaped({3, 2});
  r.at(0, 1) = 9.0f;
  EXPECT_EQ(t[1], 9.0f);
}

TEST(Tensor, DeterministicRandom) {
  gp::Rng a(42), b(42);
  auto ta = gp::Tensor::randn({16}, a);
  auto tb = gp::Tensor::randn({16}, b);
  EXPECT_TRUE(ta.equals(tb));
  gp::Rng c(43);
  EXPECT_FALSE(ta.equals(gp::Tensor::randn({16}, c)));
}

TEST(Conv, ReferenceForward) {
  // tiny hand-checkable case: 1x1x3x3 input, one 3x3 kernel of ones, pad 1
  TensorT<double> x({1, 1, 3, 3});
  for (int i = 0; i < 9; ++i) x[i] = i + 1;  // 1..9
  TensorT<double> w = TensorT<double>::full({1, 1, 3, 3}, 1.0);
  TensorT<double> b({1});
  auto y = gp::conv2d_forward(x, w, b, 1, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  // center output = sum of all inputs
  EXPECT_DOUBLE_EQ(y.at(0, 0, 1, 1), 45.0);
  // top-left output = sum of the 2x2 block {1,2,4,5}
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 12.0);
  // strided: 3x3 -> 2x2
  auto ys = gp::conv2d_forward(x, w, b, 2, 1);
  EXPECT_EQ(ys.shape(), (Shape{1, 1, 2, 2}));
}

TEST(Conv, BatchMatchesSingle) {
  gp::Rng rng(7);
  TensorT<double> x = TensorT<double>::randn({3, 2, 8, 8}, rng);
  TensorT<double> w = TensorT<double>::randn({4, 2, 3, 3}, rng, 0.5);
  TensorT<double> b = TensorT<double>::randn({4}, rng, 0.1);
  auto y = gp::conv2d_forward(x, w, b, 2, 1);
  for (int n = 0; n < 3; ++n) {
    TensorT<double> xi({1, 2, 8, 8});
    std::copy(x.data() + n * 128, x.data() + (n + 1) * 128, xi.data());
    auto yi = gp::conv2d_forward(xi, w, b, 2, 1);
    for (int64_t i = 0; i < yi.numel(); ++i)
      EXPECT_DOUBLE_EQ(yi[i], y.data()[n * yi.numel() + i]);
  }
}

// ---- gradient checks for every op, against central differences ----

namespace {

// Wraps a single-op loss: params -> mean(op(x)) with x a trainable param.
template <typename BuildFn>
double op_fd_check(gp::Shape xshape, BuildFn build, uint64_t seed, double lo = -1.0,
                   double hi = 1.0) {
  gp::Param<double> x;
  x.name = "x";
  gp::Rng rng(seed);
  x.value = TensorT<double>::rand_uniform(xshape, rng, lo, hi);
  x.grad = TensorT<double>(xshape);
  auto eval = [&]() {
    gp::Tape<double> t;
    return t.value(build(t, t.leaf(x)))[0];
  };
  auto back = [&]() {
    gp::Tape<double> t;
    int loss = build(t, t.leaf(x));
    t.backward(loss);
  };
  return testutil::fd_max_rel_error<double>({&x}, eval, back, 1e-5);
}

}  // namespace

TEST(Autograd, ElementwiseOps) {
  auto relu = [](gp::Tape<double>& t, int x) { return t.mean_all(t.relu(x)); };
  EXPECT_LT(op_fd_check({4, 5}, relu, 1), 1e-6);

  auto lrelu = [](gp::Tape<double>& t, int x) {
    return t.mean_all(t.leaky_relu(x, 0.2));
  };
  EXPECT_LT(op_fd_check({4, 5}, lrelu, 2), 1e-6);

  auto sig = [](gp::Tape<double>& t, int x) {
    return t.mean_all(t.mul(t.sigmoid(x), t.sigmoid(x)));
  };
  EXPECT_LT(op_fd_check({4, 5}, sig, 3, -3.0, 3.0), 1e-6);

  auto absl = [](gp::Tape<double>& t, int x) { return t.mean_all(t.abs(x)); };
  EXPECT_LT(op_fd_check({4, 5}, absl, 4, 0.1, 1.0), 1e-6);

  auto logc = [](gp::Tape<double>& t, int x) {
    return t.mean_all(t.log(t.clamp(x, 1e-7, 1.0)));
  };
  EXPECT_LT(op_fd_check({4, 5}, logc, 5, 0.05, 0.9), 1e-6);
}

TEST(Autograd, StructuralOps) {
  auto up = [](gp::Tape<double>& t, int x) {
    return t.mean_all(t.mul(t.upsample2(x), t.upsample2(x)));
  };
  EXPECT_LT(op_fd_check({2, 3, 4, 4}, up, 6), 1e-6);

  auto bc = [](gp::Tape<double>& t, int x) {
    int b = t.broadcast_hw(x, 3, 3);
    return t.mean_all(t.mul(b, b));
  };
  EXPECT_LT(op_fd_check({2, 5}, bc, 7), 1e-6);

  auto cat = [](gp::Tape<double>& t, int x) {
    int c = t.concat_channels(x, t.scale(x, 2.0));
    return t.mean_all(t.mul(c, c));
  };
  EXPECT_LT(op_fd_check({2, 3, 4, 4}, cat, 8), 1e-6);

  auto lum = [](gp::Tape<double>& t, int x) {
    int l = t.luma(x);
    return t.mean_all(t.mul(l, l));
  };
  EXPECT_LT(op_fd_check({2, 3, 4, 4}, lum, 9), 1e-6);

  auto rs = [](gp::Tape<double>& t, int x) {
    int f = t.flatten(x);
    return t.mean_all(t.mul(f, f));
  };
  EXPECT_LT(op_fd_check({2, 3, 2, 2}, rs, 10), 1e-6);
}

TEST(Autograd, ConvAndDense) {
  gp::Rng rng(11);
  gp::Param<double> x, w, b;
  x.value = TensorT<double>::randn({2, 3, 6, 6}, rng);
  w.value = TensorT<double>::randn({4, 3, 3, 3}, rng, 0.3);
  b.value = TensorT<double>::randn({4}, rng, 0.1);
  for (auto* p : {&x, &w, &b}) p->grad = TensorT<double>(p->value.shape());

  for (int stride : {1, 2}) {
    auto eval = [&]() {
      gp::Tape<double> t;
      int y = t.conv2d(t.leaf(x), w, b, stride, 1);
      return t.value(t.mean_all(t.mul(y, y)))[0];
    };
    auto back = [&]() {
      gp::Tape<double> t;
      int y = t.conv2d(t.leaf(x), w, b, stride, 1);
      t.backward(t.mean_all(t.mul(y, y)));
    };
    EXPECT_LT(testutil::fd_max_rel_error<double>({&x, &w, &b}, eval, back, 1e-5), 1e-5)
        << "stride " << stride;
  }

  gp::Param<double> dx, dw, db;
  dx.value = TensorT<double>::randn({3, 5}, rng);
  dw.value = TensorT<double>::randn({4, 5}, rng, 0.4);
  db.value = TensorT<double>::randn({4}, rng, 0.1);
  for (auto* p : {&dx, &dw, &db}) p->grad = TensorT<double>(p->value.shape());
  auto eval = [&]() {
    gp::Tape<double> t;
    int y = t.dense(t.leaf(dx), dw, db);
    return t.value(t.mean_all(t.mul(y, y)))[0];
  };
  auto back = [&]() {
    gp::Tape<double> t;
    int y = t.dense(t.leaf(dx), dw, db);
    t.backward(t.mean_all(t.mul(y, y)));
  };
  EXPECT_LT(testutil::fd_max_rel_error<double>({&dx, &dw, &db}, eval, back, 1e-5), 1e-6);
}

TEST(Autograd, SoftmaxCrossEntropy) {
  gp::Rng rng(13);
  gp::Param<double> logits;
  logits.value = TensorT<double>::randn({4, 5}, rng);
  logits.grad = TensorT<double>({4, 5});
  std::vector<int> labels = {1, 0, 4, 2};
  auto eval = [&]() {
    gp::Tape<double> t;
    return t.value(t.softmax_cross_entropy(t.leaf(logits), labels))[0];
  };
  auto back = [&]() {
    gp::Tape<double> t;
    t.backward(t.softmax_cross_entropy(t.leaf(logits), labels));
  };
  EXPECT_LT(testutil::fd_max_rel_error<double>({&logits}, eval, back, 1e-5), 1e-6);
}

TEST(Autograd, FrozenLeafGetsNoGradientButPassesFlow) {
  gp::Rng rng(17);
  gp::Param<double> frozen, live;
  frozen.value = TensorT<double>::randn({3, 3}, rng);
  frozen.grad = TensorT<double>({3, 3});
  frozen.trainable = false;
  live.value = TensorT<double>::randn({3, 3}, rng);
  live.grad = TensorT<double>({3, 3});

  gp::Tape<double> t;
  int loss = t.mean_all(t.mul(t.leaf(live), t.leaf(frozen)));
  t.backward(loss);
  EXPECT_DOUBLE_EQ(frozen.grad.abs_max(), 0.0);
  EXPECT_GT(live.grad.abs_max(), 0.0);
}
