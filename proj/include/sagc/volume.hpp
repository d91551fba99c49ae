// SPDX-License-Identifier: Apache-2.0
//
// Volume data model, missing-slice masks, preprocessing, synthetic phantoms
// and the binary volume/mask file formats.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace sagc {

using Rng = std::mt19937_64;

/// Stateless 64-bit mix of a base seed with stream coordinates, used to give
/// every (volume, epoch, purpose) its own reproducible RNG stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Uniform integer in [0, n) by rejection; independent of the standard
/// library's distribution implementations.
std::size_t uniform_index(Rng& rng, std::size_t n);
/// Uniform real in [0, 1) built from the top 53 bits of one draw.
double uniform_unit(Rng& rng);

/// Stack of N in-plane slices. `depth` counts every stored slice including
/// zero-padding; padded slices are flagged in `pad_mask` and are neither
/// available nor missing.
struct Volume {
  std::size_t depth = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;                // [depth, height, width] row-major
  std::vector<std::uint8_t> slice_mask;   // 1 = available, 0 = missing or pad
  std::vector<std::uint8_t> pad_mask;     // 1 = zero-padding slice

  /// All slices available, none padded.
  static Volume complete(std::size_t depth, std::size_t height, std::size_t width, std::vector<float> data);

  std::size_t slice_size() const { return height * width; }
  std::span<const float> slice(std::size_t i) const { return {data.data() + i * slice_size(), slice_size()}; }
  std::span<float> slice(std::size_t i) { return {data.data() + i * slice_size(), slice_size()}; }

  /// N = M + P, the number of non-pad slices.
  std::size_t n_slices() const;
  std::size_t n_available() const;
  std::size_t n_missing() const { return n_slices() - n_available(); }
  bool is_missing(std::size_t i) const { return !pad_mask[i] && !slice_mask[i]; }

  std::vector<std::size_t> available_indices() const;
  std::vector<std::size_t> missing_indices() const;
  std::vector<std::size_t> real_indices() const;  // every non-pad slice

  /// Replaces the availability mask of the non-pad slices.
  void set_mask(std::span<const std::uint8_t> mask);
  /// Throws ShapeError if the buffers disagree with the dimensions.
  void validate() const;
};

struct MissingSpec {
  double eta = 0.0;
  std::uint64_t rng_seed = 0;
};

/// P = round-half-up(eta * N); ConfigError unless 0 <= eta < 1 and P < N.
std::size_t missing_count(std::size_t n_slices, double eta);

/// Mask of length N with exactly missing_count(N, eta) zeros at positions
/// drawn uniformly without replacement.
std::vector<std::uint8_t> sample_missing_mask(std::size_t n_slices, double eta, Rng& rng);
std::vector<std::uint8_t> sample_missing_mask(std::size_t n_slices, const MissingSpec& spec);

struct IntensityRange {
  double min = 0.0;
  double max = 1.0;
};

struct Normalized {
  std::vector<double> values;  // in [-1, 1]
  IntensityRange range;
};

/// Affine map min -> -1, max -> +1. DegenerateInputError on a constant grid.
Normalized minmax_normalize(std::span<const double> raw);
std::vector<double> denormalize(std::span<const double> normalized, IntensityRange range);

/// Appends zero slices at the high-index end up to `target_depth`.
Volume zero_pad(const Volume& v, std::size_t target_depth);

/// In-plane transform shared by an input volume and its target.
struct Augmentation {
  bool flip = false;       // horizontal (mirror columns)
  unsigned rotations = 0;  // counter-clockwise quarter turns, 0..3
};

/// Flip with probability 0.5 and a uniform quarter-turn count with
/// probability 0.5. Non-square slices only receive 0 or 2 quarter turns.
Augmentation draw_augmentation(Rng& rng, std::size_t height, std::size_t width);
Volume apply_augmentation(const Volume& v, const Augmentation& aug);
Volume augment(const Volume& v, Rng& rng);

struct PhantomParams {
  std::size_t n_slices = 12;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t n_blobs = 6;
  double smoothness = 2.0;
  std::uint64_t seed = 0;
};

/// Raw (unnormalized) phantom intensities [n_slices, height, width]: a sum of
/// 3D Gaussian blobs whose in-plane centre and radius drift smoothly with
/// depth. Larger smoothness means slower drift.
std::vector<double> phantom_raw(const PhantomParams& params);

/// Normalized, fully available phantom volume (the ground truth).
Volume phantom_generate(const PhantomParams& params);

/// Mean Pearson correlation between consecutive non-pad slices.
double mean_adjacent_correlation(const Volume& v);

// File formats (little-endian).
//   volume: "SGCV" u32 version=1, u32 N, u32 H, u32 W, N*H*W f32
//   mask:   "SGCM" u32 version=1, u32 N, N bytes (1 = available)
void save_volume(const std::filesystem::path& path, const Volume& v);
Volume load_volume(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, std::span<const std::uint8_t> mask);
std::vector<std::uint8_t> load_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_volume(const Volume& v);
Volume decode_volume(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mask(std::span<const std::uint8_t> mask);
std::vector<std::uint8_t> decode_mask(std::span<const std::uint8_t> bytes);

}  // namespace sagc
