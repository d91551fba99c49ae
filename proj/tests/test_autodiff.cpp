// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sagc/gradcheck.hpp"
#include "sagc/gradcheck_suite.hpp"
#include "sagc/ops.hpp"

using namespace sagc;
using TD = Tensor<double>;

namespace {

TD random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = nd(rng);
  return TD(std::move(shape), std::move(v));
}

// Scalar readout with fixed random weights so no gradient is trivially zero.
TD project(const TD& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ops::sum(ops::mul(y, random_tensor(y.shape(), rng)));
}

}  // namespace

TEST(Matmul, IdentityAndAnnihilator) {
  TD a({2, 2}, {1, 2, 3, 4});
  auto id = ops::matmul(a, TD({2, 2}, {1, 0, 0, 1}));
  EXPECT_EQ(std::vector<double>(id.data().begin(), id.data().end()), (std::vector<double>{1, 2, 3, 4}));
  auto z = ops::matmul(a, TD::zeros({2, 2}));
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
  try {
    ops::matmul(TD::zeros({2, 3}), TD::zeros({2, 3}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2,3] x [2,3]"), std::string::npos);
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  auto a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  ScalarFnN<double> f = [](const std::vector<TD>& in) { return project(ops::matmul(in[0], in[1]), 7); };
  EXPECT_LT(grad_check(f, {a, b}, 1e-5), 1e-6);
}

TEST(DepthwiseConv3d, DeltaKernelIsIdentity) {
  std::mt19937_64 rng(2);
  auto x = random_tensor({2, 3, 4, 5}, rng);
  std::vector<double> k(2 * 27, 0.0);
  k[13] = k[27 + 13] = 1.0;
  auto y = ops::depthwise_conv3d(x, TD({2, 3, 3, 3}, k));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.at(i), x.at(i));
}

TEST(DepthwiseConv3d, OnesKernelSumsNeighbourhood) {
  auto y = ops::depthwise_conv3d(TD::full({1, 4, 4, 4}, 1.0), TD::full({1, 3, 3, 3}, 1.0));
  EXPECT_EQ(y.at(((1 * 4) + 1) * 4 + 1), 27.0);  // interior voxel (1,1,1)
  EXPECT_EQ(y.at(0), 8.0);                       // corner sees a 2x2x2 block
}

TEST(DepthwiseConv3d, EvenKernelRejected) {
  EXPECT_THROW(ops::depthwise_conv3d(TD::zeros({1, 3, 3, 3}), TD::zeros({1, 2, 3, 3})), ConfigError);
}

TEST(DepthwiseConv3d, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  auto x = random_tensor({2, 4, 4, 4}, rng), k = random_tensor({2, 3, 3, 3}, rng);
  ScalarFnN<double> f = [](const std::vector<TD>& in) { return project(ops::depthwise_conv3d(in[0], in[1]), 9); };
  EXPECT_LT(grad_check(f, {x, k}, 1e-5), 1e-6);
}

TEST(LayerNorm, ConstantRowCollapsesToZero) {
  auto y = ops::layer_norm(TD::full({1, 4}, 3.0), TD::full({4}, 1.0), TD::zeros({4}), 1e-5);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, TwoPointStandardization) {
  auto y = ops::layer_norm(TD({1, 2}, {1, 3}), TD::full({2}, 1.0), TD::zeros({2}), 1e-12);
  EXPECT_NEAR(y.at(0), -1.0, 1e-9);
  EXPECT_NEAR(y.at(1), 1.0, 1e-9);
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  auto x = random_tensor({3, 5}, rng), g = random_tensor({5}, rng), b = random_tensor({5}, rng);
  ScalarFnN<double> f = [](const std::vector<TD>& in) {
    return project(ops::layer_norm(in[0], in[1], in[2], 1e-5), 11);
  };
  EXPECT_LT(grad_check(f, {x, g, b}, 1e-5), 1e-5);
}

TEST(Softmax, UniformRowGivesUniformDistribution) {
  auto y = ops::softmax(TD::full({1, 4}, 0.3), -1);
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  auto y = ops::softmax(TD({1, 2}, {1000, 0}), 1);
  EXPECT_NEAR(y.at(0), 1.0, 1e-12);
  EXPECT_NEAR(y.at(1), 0.0, 1e-12);
}

TEST(Softmax, SumsToOneAlongEitherAxis) {
  std::mt19937_64 rng(5);
  auto x = random_tensor({3, 4, 5}, rng, 10.0);
  for (int axis : {0, 1, 2}) {
    auto y = ops::softmax(x, axis);
    auto s = ops::mean_axis(y, axis);  // mean * extent == sum
    for (double v : s.data()) EXPECT_NEAR(v * static_cast<double>(x.dim(axis)), 1.0, 1e-12);
  }
}

TEST(Softmax, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  auto x = random_tensor({4}, rng);
  ScalarFn<double> f = [](const TD& in) { return project(ops::softmax(in, 0), 13); };
  EXPECT_LT(grad_check(f, x, 1e-5), 1e-6);
}

TEST(Elementwise, CosineSimilarityCases) {
  TD v({3}, {0.3, -2.0, 1.5});
  EXPECT_NEAR(ops::cosine_sim(v, v).item(), 1.0, 1e-15);
  EXPECT_EQ(ops::cosine_sim(TD({2}, {1, 0}), TD({2}, {0, 1})).item(), 0.0);
  EXPECT_THROW(ops::cosine_sim(TD::zeros({2}), TD({2}, {0, 1})), DegenerateInputError);
}

TEST(Elementwise, GeluGradientAtProbePoints) {
  for (double p : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    ScalarFn<double> f = [](const TD& in) { return ops::sum(ops::gelu(in)); };
    EXPECT_LT(grad_check(f, TD({1}, {p}), 1e-5), 1e-6) << "at x=" << p;
  }
}

TEST(Elementwise, BroadcastAddOfBiasRow) {
  auto y = ops::add(TD({2, 3}, {0, 1, 2, 3, 4, 5}), TD({3}, {10, 20, 30}));
  EXPECT_EQ(y.at(4), 24.0);
  std::mt19937_64 rng(8);
  auto a = random_tensor({2, 1, 3}, rng), b = random_tensor({4, 1}, rng);
  ScalarFnN<double> f = [](const std::vector<TD>& in) { return project(ops::mul(in[0], in[1]), 3); };
  EXPECT_LT(grad_check(f, {a, b}, 1e-5), 1e-6);
}

TEST(Backward, SquareAndProductRule) {
  TD x({1}, {3.0}, true);
  ops::mul(x, x).backward();
  EXPECT_EQ(x.grad()[0], 6.0);

  TD a({1}, {2.0}, true), b({1}, {5.0}, true);
  ops::mul(a, b).backward();
  EXPECT_EQ(a.grad()[0], 5.0);
  EXPECT_EQ(b.grad()[0], 2.0);
}

TEST(Backward, SharedTensorSumsPathGradients) {
  TD x({1}, {1.5}, true);
  ops::add(ops::mul(x, x), x).backward();  // d/dx (x^2 + x) = 2x + 1
  EXPECT_EQ(x.grad()[0], 4.0);
}

TEST(Backward, RepeatedCallsAccumulateLeafGradients) {
  TD x({1}, {3.0}, true);
  auto y = ops::mul(x, x);
  y.backward();
  y.backward();
  EXPECT_EQ(x.grad()[0], 12.0);
  x.zero_grad();
  y.backward();
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, NonScalarLossRejected) {
  TD x({2}, {1, 2}, true);
  EXPECT_THROW(ops::mul(x, x).backward(), ContractError);
}

TEST(GradCheck, SumIsExactOnDyadicInputs) {
  TD x({4}, {0.5, -1.25, 2.0, 3.0});
  ScalarFn<double> f = [](const TD& in) { return ops::sum(in); };
  EXPECT_EQ(grad_check(f, x, std::ldexp(1.0, -17)), 0.0);
}

TEST(GradCheck, SumOfSquaresAgainstAnalyticGradient) {
  std::mt19937_64 rng(9);
  auto x = random_tensor({6}, rng);
  ScalarFn<double> f = [](const TD& in) { return ops::sum(ops::mul(in, in)); };
  EXPECT_LT(grad_check(f, x, 1e-4), 1e-8);
  // reverse mode itself equals 2x exactly
  auto leaf = x.clone(true);
  f(leaf).backward();
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(leaf.grad()[i], 2 * x.at(i));
}

TEST(GradCheck, LayerNormComposite) {
  std::mt19937_64 rng(10);
  auto x = random_tensor({2, 6}, rng);
  ScalarFn<double> f = [](const TD& in) {
    auto y = ops::layer_norm(in, TD::full({6}, 1.3), TD::full({6}, 0.2), 1e-5);
    return project(ops::gelu(y), 21);
  };
  EXPECT_LT(grad_check(f, x, 1e-5), 1e-5);
}

TEST(GradCheck, RejectsNonScalarFunctionAndBadEps) {
  ScalarFn<double> f = [](const TD& in) { return in; };
  EXPECT_THROW(grad_check(f, TD({2}, {1, 2}), 1e-5), ContractError);
  ScalarFn<double> g = [](const TD& in) { return ops::sum(in); };
  EXPECT_THROW(grad_check(g, TD({2}, {1, 2}), 1e-2), ContractError);
}

namespace {

// Softmax is invariant to a shared offset, so the derivative along c is
// exactly zero and only rounding remains in either precision.
template <typename X>
Tensor<X> shifted_softmax_readout(const std::vector<Tensor<X>>& in, double leak) {
  std::mt19937_64 rng(5);
  auto w = random_tensor({3, 4}, rng).cast<X>();
  auto y = ops::sum(ops::mul(ops::softmax(ops::add(in[0], in[1]), 1), w));
  return ops::add(y, ops::scale(in[1], X(leak)));
}

}  // namespace

TEST(GradCheck, ExactZeroDerivativeIsMeasuredAgainstGradientScale) {
  std::mt19937_64 rng(12);
  const std::vector<TD> inputs{random_tensor({3, 4}, rng, 3.0), TD({1}, {0.7})};
  auto f = [](const auto& in) {
    using X = typename std::decay_t<decltype(in[0])>::value_type;
    return shifted_softmax_readout<X>(in, 0.0);
  };
  EXPECT_LT(grad_check_precise<double>(f, inputs, 1e-4), 1e-10);
  EXPECT_LT(grad_check_precise<float>(f, inputs, 1e-3), 1e-5);
}

TEST(GradCheck, NonzeroGradientAtExactZeroCoordinateIsCaught) {
  std::mt19937_64 rng(12);
  const std::vector<TD> inputs{random_tensor({3, 4}, rng, 3.0), TD({1}, {0.7})};
  ScalarFnN<double> leaky = [](const std::vector<TD>& in) { return shifted_softmax_readout<double>(in, 1e-3); };
  ScalarFnN<long double> exact = [](const std::vector<Tensor<long double>>& in) {
    return shifted_softmax_readout<long double>(in, 0.0);
  };
  EXPECT_GT((grad_check_mixed<double, long double>(leaky, exact, inputs, 1e-4)), 1e-4);
}

TEST(GradCheckSuite, RunsOneModuleAndRejectsUnknownNames) {
  const auto records = run_gradcheck_suite("vsa", 2);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].seeds, 2u);
  EXPECT_TRUE(records[0].passed());
  EXPECT_THROW(run_gradcheck_suite("decoder"), ConfigError);
}
