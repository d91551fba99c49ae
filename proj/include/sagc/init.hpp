// SPDX-License-Identifier: Apache-2.0
//
// Parameter initializers. Values are drawn in double precision and then
// cast, so float and double models built from one seed hold the same numbers
// up to rounding.

#pragma once

#include <cmath>
#include <string>

#include "sagc/tensor.hpp"
#include "sagc/volume.hpp"

namespace sagc::init {

inline double standard_normal(Rng& rng) {
  // Box-Muller on our own uniform draws keeps streams library-independent.
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename T>
Tensor<T> normal(Shape shape, double stddev, Rng& rng) {
  std::vector<T> v(numel(shape));
  for (auto& x : v) x = static_cast<T>(stddev * standard_normal(rng));
  return Tensor<T>(std::move(shape), std::move(v));
}

template <typename T>
Tensor<T> xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return normal<T>({fan_in, fan_out}, std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)), rng);
}

/// Conv weight [out, in, kh, kw] scaled for GELU-like activations.
template <typename T>
Tensor<T> conv_he(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw, Rng& rng) {
  return normal<T>({out, in, kh, kw}, std::sqrt(2.0 / static_cast<double>(in * kh * kw)), rng);
}

template <typename T>
Tensor<T> zeros(Shape shape) {
  return Tensor<T>::zeros(std::move(shape));
}

template <typename T>
Tensor<T> ones(Shape shape) {
  return Tensor<T>::full(std::move(shape), T(1));
}

}  // namespace sagc::init
