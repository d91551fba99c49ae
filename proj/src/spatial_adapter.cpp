// SPDX-License-Identifier: Apache-2.0
#include "sagc/spatial_adapter.hpp"

#include "sagc/ops.hpp"

namespace sagc {

template <typename T>
VsaParams<T> VsaParams<T>::init(std::size_t channels, std::size_t reduction, Rng& rng) {
  if (reduction == 0 || channels % reduction != 0) {
    throw ConfigError("VSA: channels " + std::to_string(channels) + " not divisible by reduction " +
                      std::to_string(reduction));
  }
  const std::size_t b = channels / reduction;
  VsaParams p;
  p.norm_gamma = init::ones<T>({channels});
  p.norm_beta = init::zeros<T>({channels});
  p.w_down = init::xavier<T>(channels, b, rng);
  // Near-delta start: mostly pass-through with a little neighbourhood mixing.
  p.conv_kernel = init::normal<T>({b, 3, 3, 3}, 0.05, rng);
  for (std::size_t c = 0; c < b; ++c) p.conv_kernel.mutable_data()[c * 27 + 13] += T(1);
  p.w_up = init::zeros<T>({b, channels});
  return p;
}

template <typename T>
std::size_t VsaParams<T>::parameter_count() const {
  return norm_gamma.numel() + norm_beta.numel() + w_down.numel() + conv_kernel.numel() + w_up.numel();
}

template <typename T>
Tensor<T> vsa_forward(const Tensor<T>& h, const TokenGrid& grid, const VsaParams<T>& p) {
  if (h.ndim() != 2 || h.dim(0) != grid.tokens()) {
    throw ShapeError("vsa_forward: tokens " + to_string(h.shape()) + " do not fill grid " +
                     std::to_string(grid.depth) + "x" + std::to_string(grid.height) + "x" + std::to_string(grid.width));
  }
  const std::size_t b = p.bottleneck();
  auto down = ops::matmul(ops::layer_norm(h, p.norm_gamma, p.norm_beta, T(kLayerNormEps)), p.w_down);
  auto volume = ops::reshape(ops::transpose(down), {b, grid.depth, grid.height, grid.width});
  auto mixed = ops::depthwise_conv3d(volume, p.conv_kernel);
  auto back = ops::transpose(ops::reshape(mixed, {b, grid.tokens()}));
  return ops::add(h, ops::matmul(ops::gelu(back), p.w_up));
}

template struct VsaParams<float>;
template struct VsaParams<double>;
template struct VsaParams<long double>;
template Tensor<float> vsa_forward(const Tensor<float>&, const TokenGrid&, const VsaParams<float>&);
template Tensor<double> vsa_forward(const Tensor<double>&, const TokenGrid&, const VsaParams<double>&);
template Tensor<long double> vsa_forward(const Tensor<long double>&, const TokenGrid&,
                                         const VsaParams<long double>&);

}  // namespace sagc
