// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "sagc/ops.hpp"

namespace testutil {

using sagc::Shape;
using sagc::Tensor;

template <typename T = double>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<T> v(sagc::numel(shape));
  for (auto& x : v) x = static_cast<T>(nd(rng));
  return Tensor<T>(std::move(shape), std::move(v));
}

// Scalar readout with fixed random weights so no gradient is trivially zero.
template <typename T>
Tensor<T> project(const Tensor<T>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sagc::ops::sum(sagc::ops::mul(y, random_tensor<T>(y.shape(), rng)));
}

template <typename T>
void fill_random(Tensor<T>& t, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  for (auto& x : t.mutable_data()) x = static_cast<T>(nd(rng));
}

}  // namespace testutil
