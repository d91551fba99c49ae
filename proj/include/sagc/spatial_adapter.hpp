// SPDX-License-Identifier: Apache-2.0
//
// Volumetric spatial adapter: a bottleneck residual branch whose middle is a
// depthwise 3D convolution over the token grid,
//
//   out = h + gelu(conv3d(norm(h) W_down)) W_up.
//
// Tokens are laid out (depth, height, width) row-major, the same order the
// patch embedding produces, so token t sits at grid position
// (t / (Hp*Wp), (t / Wp) % Hp, t % Wp).

#pragma once

#include <string>

#include "sagc/init.hpp"
#include "sagc/tensor.hpp"

namespace sagc {

struct TokenGrid {
  std::size_t depth = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t tokens() const { return depth * height * width; }
  std::size_t tokens_per_slice() const { return height * width; }
};

template <typename T>
struct VsaParams {
  Tensor<T> norm_gamma;   // [C]
  Tensor<T> norm_beta;    // [C]
  Tensor<T> w_down;       // [C, C/r]
  Tensor<T> conv_kernel;  // [C/r, 3, 3, 3]
  Tensor<T> w_up;         // [C/r, C], zero at init

  /// ConfigError unless channels is divisible by reduction.
  static VsaParams init(std::size_t channels, std::size_t reduction, Rng& rng);

  std::size_t channels() const { return w_down.dim(0); }
  std::size_t bottleneck() const { return w_down.dim(1); }
  std::size_t parameter_count() const;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "norm_gamma", norm_gamma);
    f(prefix + "norm_beta", norm_beta);
    f(prefix + "w_down", w_down);
    f(prefix + "conv_kernel", conv_kernel);
    f(prefix + "w_up", w_up);
  }
};

inline constexpr double kLayerNormEps = 1e-5;

/// h: [tokens, C]. ShapeError if tokens != grid.tokens().
template <typename T>
Tensor<T> vsa_forward(const Tensor<T>& h, const TokenGrid& grid, const VsaParams<T>& p);

}  // namespace sagc
