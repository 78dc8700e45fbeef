#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pecnet/errors.hpp"
#include "pecnet/layers.hpp"
#include "support/finite_difference.hpp"
#include "support/reference_model.hpp"

namespace pecnet {
namespace {

using testing::kFdStep;
using testing::max_relative_error;
using testing::numeric_gradient;
using testing::random_away_from_zero;
using testing::random_tensor;

constexpr int kSeeds = 20;
constexpr double kLayerTolerance = 1e-4;

// Scalar probe loss L = sum(r * y) + sum(y^2) / 2, so dL/dy = r + y.
double probe_loss(const Tensor& y, const Tensor& r) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += r[i] * y[i] + 0.5 * y[i] * y[i];
  return total;
}

Tensor probe_grad(const Tensor& y, const Tensor& r) { return r + y; }

// ---------------------------------------------------------------------------
// Conv1D

TEST(Conv1D, HandExpandedFourTapCase) {
  Conv1D conv(1, 1, 3);
  conv.kernels() = Tensor({1, 1, 3}, {1, 0, -1});
  const Tensor out = conv.forward(Tensor::matrix({{1, 2, 3, 4}}));
  EXPECT_EQ(out, Tensor::matrix({{-2, -2}}));
}

TEST(Conv1D, ZeroKernelsGiveBias) {
  std::mt19937_64 rng(3);
  Conv1D conv(2, 3, 4);
  conv.bias() = Tensor::vector({0.5, -1.0, 2.0});
  const Tensor out = conv.forward(random_tensor({2, 9}, rng));
  ASSERT_EQ(out.shape(), (Shape{3, 6}));
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(out.at(o, t), conv.bias()[o]);
}

TEST(Conv1D, MatchesNaiveTripleLoop) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    Conv1D conv(2, 3, 3);
    conv.kernels() = random_tensor({3, 2, 3}, rng);
    conv.bias() = random_tensor({3}, rng);
    const Tensor input = random_tensor({2, 10}, rng);
    const Tensor out = conv.forward(input);

    std::vector<std::vector<double>> rows(2, std::vector<double>(10));
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t t = 0; t < 10; ++t) rows[c][t] = input.at(c, t);
    const auto expected = testing::naive_conv1d(rows, conv.kernels(), conv.bias());
    ASSERT_EQ(out.shape(), (Shape{3, 8}));
    for (std::size_t o = 0; o < 3; ++o)
      for (std::size_t t = 0; t < 8; ++t) EXPECT_NEAR(out.at(o, t), expected[o][t], 1e-12);
  }
}

TEST(Conv1D, OutputLengthIsValidPadding) {
  for (std::size_t width = 1; width <= 5; ++width) {
    for (std::size_t length = width; length <= width + 12; ++length) {
      Conv1D conv(1, 2, width);
      EXPECT_EQ(conv.forward(Tensor({1, length}, 1.0)).dim(1), length - width + 1);
    }
  }
}

TEST(Conv1D, RejectsShortInputAndWrongChannels) {
  Conv1D conv(1, 1, 3);
  EXPECT_THROW(conv.forward(Tensor({1, 2}, 0.0)), ShapeError);
  EXPECT_THROW(conv.forward(Tensor({2, 5}, 0.0)), ShapeError);
}

TEST(Conv1D, BackwardBeforeForwardIsStateError) {
  Conv1D conv(1, 1, 3);
  EXPECT_THROW(conv.backward(Tensor({1, 2}, 0.0)), StateError);
}

TEST(Conv1D, ZeroUpstreamGradientGivesZeroGradients) {
  std::mt19937_64 rng(8);
  Conv1D conv(2, 2, 3);
  conv.he_init(rng);
  const Tensor out = conv.forward(random_tensor({2, 7}, rng));
  const Conv1DGradients g = conv.backward(Tensor(out.shape(), 0.0));
  for (const Tensor* t : {&g.input, &g.kernels, &g.bias})
    for (double v : t->values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1D, SingleStepReducesToDenseFormulas) {
  // T == width: one output per channel, i.e. a fully connected map over the
  // flattened [C, K] window.
  std::mt19937_64 rng(21);
  Conv1D conv(2, 3, 4);
  conv.kernels() = random_tensor({3, 2, 4}, rng);
  conv.bias() = random_tensor({3}, rng);
  const Tensor x = random_tensor({2, 4}, rng);
  const Tensor y = conv.forward(x);
  const Tensor g = random_tensor({3, 1}, rng);
  const Conv1DGradients grads = conv.backward(g);

  Dense fc(8, 3);
  fc.weights() = conv.kernels().reshaped({3, 8});
  fc.bias() = conv.bias();
  const Tensor fy = fc.forward(x.reshaped({8}));
  const DenseGradients fg = fc.backward(g.reshaped({3}));
  for (std::size_t o = 0; o < 3; ++o) EXPECT_NEAR(y[o], fy[o], 1e-12);
  for (std::size_t i = 0; i < 24; ++i) EXPECT_NEAR(grads.kernels[i], fg.weights[i], 1e-12);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(grads.input[i], fg.input[i], 1e-12);
  for (std::size_t o = 0; o < 3; ++o) EXPECT_NEAR(grads.bias[o], fg.bias[o], 1e-12);
}

TEST(Conv1D, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(100 + seed);
    Conv1D conv(2, 3, 3);
    conv.kernels() = random_tensor({3, 2, 3}, rng);
    conv.bias() = random_tensor({3}, rng);
    Tensor input = random_tensor({2, 10}, rng);
    const Tensor r = random_tensor({3, 8}, rng);

    const Tensor out = conv.forward(input);
    const Conv1DGradients g = conv.backward(probe_grad(out, r));
    auto loss = [&] { return probe_loss(conv.infer(input), r); };

    EXPECT_LT(max_relative_error(g.input, numeric_gradient(loss, input)), kLayerTolerance) << "seed " << seed;
    EXPECT_LT(max_relative_error(g.kernels, numeric_gradient(loss, conv.kernels())), kLayerTolerance);
    EXPECT_LT(max_relative_error(g.bias, numeric_gradient(loss, conv.bias())), kLayerTolerance);
  }
}

TEST(Conv1D, BatchedForwardMatchesPerSample) {
  std::mt19937_64 rng(4);
  Conv1D conv(2, 4, 3);
  conv.he_init(rng);
  const Tensor batch = random_tensor({5, 2, 11}, rng);
  const Tensor out = conv.forward(batch);
  for (std::size_t b = 0; b < 5; ++b) {
    Tensor one({2, 11});
    for (std::size_t i = 0; i < one.size(); ++i) one[i] = batch[b * 22 + i];
    const Tensor single = conv.infer(one);
    for (std::size_t i = 0; i < single.size(); ++i) EXPECT_NEAR(out[b * single.size() + i], single[i], 1e-12);
  }
}

// ---------------------------------------------------------------------------
// ReLU

TEST(Relu, ForwardAndSubgradient) {
  EXPECT_EQ(relu_forward(Tensor::vector({-1, 0, 2})), Tensor::vector({0, 0, 2}));
  EXPECT_EQ(relu_backward(Tensor::vector({5, 5, 5}), Tensor::vector({-1, 0, 2})), Tensor::vector({0, 0, 5}));
  EXPECT_THROW(relu_backward(Tensor::vector({1}), Tensor::vector({1, 2})), ShapeError);
}

TEST(Relu, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(200 + seed);
    Tensor x = random_away_from_zero({3, 7}, rng);
    const Tensor r = random_tensor({3, 7}, rng);
    const Tensor g = relu_backward(probe_grad(relu_forward(x), r), x);
    auto loss = [&] { return probe_loss(relu_forward(x), r); };
    EXPECT_LT(max_relative_error(g, numeric_gradient(loss, x)), kLayerTolerance);
  }
}

// ---------------------------------------------------------------------------
// Max pooling

TEST(MaxPool, Examples) {
  const PoolResult r = maxpool_forward(PoolSpec(3), Tensor::matrix({{1, 5, 2, 7, 0, 3}}));
  EXPECT_EQ(r.output, Tensor::matrix({{5, 7}}));
  EXPECT_EQ(maxpool_backward(Tensor::matrix({{1, 1}}), r.indices), Tensor::matrix({{0, 1, 0, 1, 0, 0}}));
  EXPECT_EQ(maxpool_backward(Tensor::matrix({{0, 0}}), r.indices), Tensor({1, 6}, 0.0));
}

TEST(MaxPool, ConstantInputFirstIndexWins) {
  const PoolResult r = maxpool_forward(PoolSpec(3), Tensor({2, 7}, 4.0));
  EXPECT_EQ(r.output, Tensor({2, 2}, 4.0));
  EXPECT_EQ(r.indices.argmax, (std::vector<std::size_t>{0, 3, 7, 10}));
}

TEST(MaxPool, DropsTrailingRemainderAndRejectsShortInput) {
  EXPECT_EQ(maxpool_forward(PoolSpec(3), Tensor({1, 8}, 1.0)).output.dim(1), 2u);
  EXPECT_THROW(maxpool_forward(PoolSpec(3), Tensor({1, 2}, 1.0)), ShapeError);
  EXPECT_THROW(PoolSpec(3, 2), ConfigError);
}

TEST(MaxPool, MatchesBruteForceWindowedMax) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(300 + seed);
    const Tensor x = random_tensor({1, 30}, rng);
    const Tensor y = maxpool_forward(PoolSpec(3), x).output;
    ASSERT_EQ(y.dim(1), 10u);
    for (std::size_t w = 0; w < 10; ++w) {
      double best = -1e300;
      for (std::size_t k = 0; k < 3; ++k) best = std::max(best, x[3 * w + k]);
      EXPECT_EQ(y[w], best);
    }
  }
}

TEST(MaxPool, StaleIndicesAreStateError) {
  const PoolResult r = maxpool_forward(PoolSpec(2), Tensor({1, 6}, 1.0));
  EXPECT_THROW(maxpool_backward(Tensor({1, 2}, 1.0), r.indices), StateError);
  EXPECT_THROW(maxpool_backward(Tensor({1, 3}, 1.0), PoolIndices{}), StateError);
}

TEST(MaxPool, BackwardPreservesGradientMass) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor({3, 20}, rng);
    const PoolResult r = maxpool_forward(PoolSpec(3), x);
    const Tensor g = random_tensor(r.output.shape(), rng);
    EXPECT_NEAR(sum(maxpool_backward(g, r.indices)), sum(g), 1e-12);
  }
}

TEST(MaxPool, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(400 + seed);
    Tensor x = random_tensor({2, 12}, rng);
    const Tensor r = random_tensor({2, 4}, rng);
    const PoolResult res = maxpool_forward(PoolSpec(3), x);
    const Tensor g = maxpool_backward(probe_grad(res.output, r), res.indices);
    auto loss = [&] { return probe_loss(maxpool_forward(PoolSpec(3), x).output, r); };
    EXPECT_LT(max_relative_error(g, numeric_gradient(loss, x)), kLayerTolerance);
  }
}

// ---------------------------------------------------------------------------
// Global average pooling

TEST(Gap, Examples) {
  EXPECT_EQ(gap_forward(Tensor::matrix({{1, 2, 3}, {4, 5, 6}})), Tensor::vector({2, 5}));
  EXPECT_EQ(gap_forward(Tensor::matrix({{1.5}, {-2}})), Tensor::vector({1.5, -2}));
}

TEST(Gap, BackwardSpreadsUniformly) {
  const Tensor g = gap_backward(Tensor::vector({3, -6}), 3);
  EXPECT_EQ(g, Tensor::matrix({{1, 1, 1}, {-2, -2, -2}}));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor up = random_tensor({4}, rng);
    const Tensor down = gap_backward(up, 8);
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < 8; ++t) s += down.at(c, t);
      EXPECT_NEAR(s, up[c], 1e-15);
    }
  }
}

TEST(Gap, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(500 + seed);
    Tensor x = random_tensor({3, 9}, rng);
    const Tensor r = random_tensor({3}, rng);
    const Tensor g = gap_backward(probe_grad(gap_forward(x), r), 9);
    auto loss = [&] { return probe_loss(gap_forward(x), r); };
    EXPECT_LT(max_relative_error(g, numeric_gradient(loss, x)), kLayerTolerance);
  }
}

// ---------------------------------------------------------------------------
// Fully connected

TEST(Dense, IdentityAndZeroInput) {
  Dense fc(3, 3);
  fc.weights() = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(fc.forward(Tensor::vector({4, -5, 6})), Tensor::vector({4, -5, 6}));
  fc.bias() = Tensor::vector({1, 2, 3});
  EXPECT_EQ(fc.forward(Tensor::vector({0, 0, 0})), Tensor::vector({1, 2, 3}));
  EXPECT_THROW(fc.forward(Tensor::vector({1, 2})), ShapeError);
  Dense fresh(2, 2);
  EXPECT_THROW(fresh.backward(Tensor::vector({1, 1})), StateError);
}

TEST(Dense, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(600 + seed);
    Dense fc(5, 4);
    fc.weights() = random_tensor({4, 5}, rng);
    fc.bias() = random_tensor({4}, rng);
    Tensor x = random_tensor({3, 5}, rng);
    const Tensor r = random_tensor({3, 4}, rng);
    const DenseGradients g = fc.backward(probe_grad(fc.forward(x), r));
    auto loss = [&] { return probe_loss(fc.infer(x), r); };
    EXPECT_LT(max_relative_error(g.input, numeric_gradient(loss, x)), kLayerTolerance);
    EXPECT_LT(max_relative_error(g.weights, numeric_gradient(loss, fc.weights())), kLayerTolerance);
    EXPECT_LT(max_relative_error(g.bias, numeric_gradient(loss, fc.bias())), kLayerTolerance);
  }
}

// ---------------------------------------------------------------------------
// Softmax

TEST(Softmax, Examples) {
  EXPECT_EQ(softmax(Tensor::vector({0, 0})), Tensor::vector({0.5, 0.5}));
  const Tensor big = softmax(Tensor::vector({1000, 0}));
  EXPECT_TRUE(big.all_finite());
  EXPECT_NEAR(big[0], 1.0, 1e-15);
  EXPECT_NEAR(big[1], 0.0, 1e-15);
}

TEST(Softmax, ShiftInvariantProbabilityVector) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> shift(-50, 50);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_tensor({7}, rng, 5.0);
    const double k = shift(rng);
    Tensor shifted = x;
    for (double& v : shifted.values()) v += k;
    const Tensor p = softmax(x), q = softmax(shifted);
    double total = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_GE(p[i], 0.0);
      EXPECT_NEAR(p[i], q[i], 1e-12);
      total += p[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace pecnet
