// SPDX-License-Identifier: Apache-2.0
//
// Training objective: pixel L1 plus a feature-space L1 under a fixed random
// conv stack, applied separately to available slices (reconstruction) and
// missing slices (synthesis), plus the mean cross-view contrastive loss.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sagc/tensor.hpp"

namespace sagc {

struct LossWeights {
  double lambda_rec = 5.0;
  double lambda_syn = 20.0;
  double lambda_cl = 0.001;
  double perceptual_weight = 0.1;  // relative to pixel L1 inside each term

  /// ConfigError if any weight is negative or not finite.
  void validate() const;
};

/// Three 3x3 stride-2 convolutions (1 -> 8 -> 16 -> 32 channels) with GELU,
/// drawn once from a seed and never trained.
class PerceptualNet {
 public:
  static constexpr std::array<std::size_t, 4> kWidths = {1, 8, 16, 32};
  static constexpr std::uint64_t kDefaultSeed = 0x5eed;

  explicit PerceptualNet(std::uint64_t seed = kDefaultSeed);

  /// Feature maps after each layer for slices x [S, 1, H, W].
  template <typename T>
  std::vector<Tensor<T>> features(const Tensor<T>& x) const;

  /// FNV-1a hash of the weight bytes.
  std::uint64_t checksum() const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::vector<Tensor<float>> weights_, biases_;
};

/// Mean |pred - target| over the listed slices of [D, H, W] tensors.
/// ContractError on an empty selection or mismatched shapes.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> slices);

/// Mean over the three feature depths of the mean |f(pred) - f(target)|
/// across the listed slices. Same errors as l1_loss.
template <typename T>
Tensor<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> slices,
                          const PerceptualNet& net);

template <typename T>
struct LossTerms {
  Tensor<T> total;  // [1] each
  Tensor<T> rec;
  Tensor<T> syn;
  Tensor<T> cl;
};

/// rec and syn are L1 + perceptual_weight * perceptual over the available
/// and missing slices; syn is zero when nothing is missing. cl is the mean
/// of the tap losses (zero if there are none). ContractError if no slice is
/// available.
template <typename T>
LossTerms<T> total_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> available,
                        std::span<const std::size_t> missing, const std::vector<Tensor<T>>& cl_losses,
                        const PerceptualNet& net, const LossWeights& w);

/// Weighted sum of precomputed components.
double combine_loss(double rec, double syn, double cl, const LossWeights& w);

}  // namespace sagc
