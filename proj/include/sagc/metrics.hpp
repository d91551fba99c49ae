// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "sagc/volume.hpp"

namespace sagc {

inline constexpr double kPsnrCapDb = 100.0;
inline constexpr double kDefaultDataRange = 2.0;  // data normalized to [-1, 1]

double mae(std::span<const float> pred, std::span<const float> target);
/// 10 log10(range^2 / MSE), reported as 100 dB once MSE < 1e-12.
double psnr(std::span<const float> pred, std::span<const float> target, double data_range = kDefaultDataRange);
double psnr_from_mse(double mse, double data_range = kDefaultDataRange);

/// Mean SSIM of one slice: 11x11 Gaussian window (sigma 1.5) over valid
/// positions, C1 = (0.01 R)^2, C2 = (0.03 R)^2. Slices smaller than the
/// window use the largest odd window that fits.
double ssim_slice(std::span<const float> pred, std::span<const float> target, std::size_t height, std::size_t width,
                  double data_range = kDefaultDataRange);

struct QualityMetrics {
  double mae = 0;
  double psnr = 0;
  double ssim = 0;
};

/// MAE and PSNR pooled over the voxels of the chosen slices; SSIM averaged
/// over those slices.
QualityMetrics volume_metrics(const Volume& pred, const Volume& target, std::span<const std::size_t> slices,
                              double data_range = kDefaultDataRange);

}  // namespace sagc
