// SPDX-License-Identifier: Apache-2.0
//
// Optimization (Adam with a cosine learning-rate schedule), the training
// loop over synthetic or stored volumes, evaluation against two classical
// baselines, and inference on a single volume.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sagc/backbone.hpp"
#include "sagc/metrics.hpp"
#include "sagc/objectives.hpp"

namespace sagc {

struct TrainConfig {
  BackboneConfig model;
  LossWeights loss;
  std::size_t epochs = 30;
  std::size_t batch_size = 2;
  std::size_t max_steps = 0;  // 0: epochs * ceil(n_train / batch_size)
  double lr_init = 1e-4;
  double lr_final = 5e-6;
  double grad_clip = 1.0;  // global gradient norm; 0 disables
  double eta = 0.25;
  std::uint64_t seed = 0;
  std::size_t n_train = 40;
  std::size_t n_test = 10;
  std::size_t n_slices = 12;
  std::size_t phantom_blobs = 6;
  double phantom_smoothness = 2.0;
  bool augment = true;
  bool fixed_mask = false;  // one mask per volume for the whole run
  std::string data_dir;     // stored volumes instead of generated phantoms
  std::string out_dir;      // checkpoint.sgck and trace.csv when set

  /// ConfigError naming the problem. eta must lie in [0, 1).
  void validate() const;
  std::size_t steps_per_epoch() const;
  std::size_t total_steps() const;

  /// Applies `key = value` text over the defaults. Model keys (see
  /// BackboneConfig) are accepted too; `size` sets height and width.
  /// ConfigError with the line number on unknown keys or bad values.
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
};

/// lr_final + (lr_init - lr_final) (1 + cos(pi step / total)) / 2.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr_init, double lr_final);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  std::vector<std::vector<double>> m, v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update of every tensor in place. Moments are
/// created on the first call. NumericError naming the tensor if a gradient is
/// not finite; ShapeError if grads do not match params.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<std::vector<T>>& grads,
               const std::vector<std::string>& names, AdamState& state, double lr);

/// Scales grads in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_global_norm(std::vector<std::vector<T>>& grads, double max_norm);

struct TraceRow {
  std::size_t step = 0;
  double lr = 0;
  double total = 0;
  double rec = 0;
  double syn = 0;
  double cl = 0;
};

std::string trace_csv_header();
std::string trace_csv_row(const TraceRow& r);

struct TrainResult {
  ModelParams<float> params;
  std::vector<TraceRow> trace;
};

/// Phantom or stored volumes used for training (first) and testing.
std::vector<Volume> training_volumes(const TrainConfig& cfg);
std::vector<Volume> test_volumes(const TrainConfig& cfg);

/// Deterministic for a given config. Each step draws a fresh mask and
/// augmentation per volume from (seed, volume, epoch). Throws NumericError
/// on a non-finite loss or gradient after writing the trace so far.
TrainResult train(const TrainConfig& cfg);
TrainResult train(const TrainConfig& cfg, const std::vector<Volume>& volumes);

/// Baselines fill missing slices from available ones (nearest copy, ties to
/// the lower index; or linear interpolation between the nearest available
/// slices on either side, nearest copy beyond the ends).
Volume impute_nearest(const Volume& v);
Volume impute_linear(const Volume& v);

/// Runs the model on a normalized volume. Missing slices always come from the
/// network; available slices are copied from the input when passthrough.
Volume impute_normalized(const Checkpoint& ck, const Volume& v, bool passthrough = true);

/// Normalizes by the range of the available voxels, imputes, and maps back.
/// ConfigError if the geometry does not fit the checkpoint.
Volume impute(const Checkpoint& ck, const Volume& v, bool passthrough = true);

struct MethodMetrics {
  QualityMetrics missing;
  QualityMetrics all;
};

struct VolumeReport {
  std::size_t index = 0;
  std::vector<std::uint8_t> mask;
  MethodMetrics model, nearest, linear;
};

struct EvalReport {
  double eta = 0;
  std::uint64_t seed = 0;
  std::vector<VolumeReport> volumes;
  MethodMetrics mean_model, mean_nearest, mean_linear;

  /// {"eta", "seed", "volumes": [{"index", "mask", "model": [{"mae", "psnr",
  /// "ssim", "scope"}, ...], ...}], "mean": {...}}
  std::string to_json() const;
};

/// Fixed masks per test volume from (seed, index). Error maps |pred - target|
/// of the model output go to error_dir as error_NNN.sgcv when set.
EvalReport evaluate(const Checkpoint& ck, const std::vector<Volume>& volumes, double eta, std::uint64_t seed,
                    const std::filesystem::path& error_dir = {});

/// Sorted *.sgcv files of a directory.
std::vector<Volume> load_volume_dir(const std::filesystem::path& dir);

}  // namespace sagc
