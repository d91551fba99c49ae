// SPDX-License-Identifier: Apache-2.0
#include "sagc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sagc/errors.hpp"

namespace sagc {
namespace {

void require_same_size(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("metric inputs differ in size: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

double mse(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

std::vector<double> gaussian_taps(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const double c = static_cast<double>(size / 2);
  double total = 0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2 * sigma * sigma));
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Separable valid-mode filtering of an HxW image.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t k = taps.size();
  const std::size_t ho = h - k + 1, wo = w - k + 1;
  std::vector<double> rows(h * wo, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < wo; ++x) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += taps[t] * img[y * w + x + t];
      rows[y * wo + x] = s;
    }
  std::vector<double> out(ho * wo, 0.0);
  for (std::size_t y = 0; y < ho; ++y)
    for (std::size_t x = 0; x < wo; ++x) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += taps[t] * rows[(y + t) * wo + x];
      out[y * wo + x] = s;
    }
  return out;
}

}  // namespace

double mae(std::span<const float> pred, std::span<const float> target) {
  require_same_size(pred, target);
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(static_cast<double>(pred[i]) - target[i]);
  return s / static_cast<double>(pred.size());
}

double psnr_from_mse(double m, double data_range) {
  if (!(data_range > 0)) throw ConfigError("PSNR data range must be positive");
  if (m < 1e-12) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(data_range * data_range / m));
}

double psnr(std::span<const float> pred, std::span<const float> target, double data_range) {
  require_same_size(pred, target);
  return psnr_from_mse(mse(pred, target), data_range);
}

double ssim_slice(std::span<const float> pred, std::span<const float> target, std::size_t height, std::size_t width,
                  double data_range) {
  require_same_size(pred, target);
  if (pred.size() != height * width) throw ShapeError("ssim_slice: buffer size differs from height*width");
  if (!(data_range > 0)) throw ConfigError("SSIM data range must be positive");
  std::size_t win = std::min<std::size_t>({11, height, width});
  if (win % 2 == 0) --win;
  const auto taps = gaussian_taps(win, 1.5);
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);

  const std::size_t n = pred.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = pred[i];
    y[i] = target[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, height, width, taps);
  const auto my = filter_valid(y, height, width, taps);
  const auto sxx = filter_valid(xx, height, width, taps);
  const auto syy = filter_valid(yy, height, width, taps);
  const auto sxy = filter_valid(xy, height, width, taps);
  double total = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

QualityMetrics volume_metrics(const Volume& pred, const Volume& target, std::span<const std::size_t> slices,
                              double data_range) {
  if (pred.height != target.height || pred.width != target.width) {
    throw ShapeError("volume_metrics: in-plane sizes differ");
  }
  if (slices.empty()) throw ContractError("volume_metrics: no slices selected");
  QualityMetrics m;
  double abs_sum = 0, sq_sum = 0, ssim_sum = 0;
  for (auto z : slices) {
    if (z >= pred.depth || z >= target.depth) throw ShapeError("volume_metrics: slice index out of range");
    const auto a = pred.slice(z);
    const auto b = target.slice(z);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - b[i];
      abs_sum += std::abs(d);
      sq_sum += d * d;
    }
    ssim_sum += ssim_slice(a, b, pred.height, pred.width, data_range);
  }
  const double count = static_cast<double>(slices.size() * pred.slice_size());
  m.mae = abs_sum / count;
  m.psnr = psnr_from_mse(sq_sum / count, data_range);
  m.ssim = ssim_sum / static_cast<double>(slices.size());
  return m;
}

}  // namespace sagc
