// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "metric_oracles.hpp"
#include "sagc/metrics.hpp"

using namespace sagc;

namespace {

std::vector<float> random_image(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(2 * uniform_unit(rng) - 1);
  return v;
}

}  // namespace

TEST(Metrics, IdenticalInputs) {
  Rng rng(1);
  auto a = random_image(32 * 32, rng);
  EXPECT_EQ(mae(a, a), 0.0);
  EXPECT_EQ(psnr(a, a), 100.0);
  EXPECT_EQ(ssim_slice(a, a, 32, 32), 1.0);
}

TEST(Metrics, PsnrAnalyticCase) {
  EXPECT_NEAR(psnr_from_mse(0.04, 2.0), 20.0, 1e-9);
  std::vector<float> a(100, 0.0f), b(100, 0.2f);  // MSE 0.04 up to f32 rounding of 0.2
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
}

TEST(Metrics, PsnrDecreasesWithNoiseAmplitude) {
  Rng rng(2);
  auto clean = random_image(32 * 32, rng);
  auto noise = random_image(32 * 32, rng);
  double last = 1e9;
  for (double amp : {0.01, 0.05, 0.1, 0.2}) {
    std::vector<float> noisy(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) noisy[i] = clean[i] + static_cast<float>(amp) * noise[i];
    const double p = psnr(noisy, clean);
    EXPECT_LT(p, last);
    last = p;
  }
}

TEST(Metrics, MatchIndependentNaiveImplementations) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    auto a = random_image(32 * 32, rng), b = random_image(32 * 32, rng);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.7f * a[i] + 0.3f * b[i];
    EXPECT_NEAR(mae(a, b), oracle::naive_mae(a, b), 1e-12);
    EXPECT_NEAR(psnr(a, b), oracle::naive_psnr(a, b, 2.0), 1e-9);
    EXPECT_NEAR(ssim_slice(a, b, 32, 32), oracle::naive_ssim(a, b, 32, 32, 2.0), 1e-4);
  }
}

TEST(Metrics, SsimIsBounded) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    auto a = random_image(16 * 16, rng), b = random_image(16 * 16, rng);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = -a[i] + 0.1f * b[i];
    const double s = ssim_slice(a, b, 16, 16);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Metrics, SmallSliceUsesShrunkWindow) {
  Rng rng(5);
  auto a = random_image(6 * 6, rng);
  EXPECT_EQ(ssim_slice(a, a, 6, 6), 1.0);
  auto b = random_image(6 * 6, rng);
  EXPECT_NEAR(ssim_slice(a, b, 6, 6), oracle::naive_ssim(a, b, 6, 6, 2.0), 1e-4);
}
