// SPDX-License-Identifier: Apache-2.0
//
// Gradient checks over every differentiable primitive and the composite
// modules, run over many random seeds at double and single precision. Shared
// by the command-line tool and the acceptance harness.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sagc {

inline constexpr double kGradTolF64 = 1e-5;
inline constexpr double kGradTolF32 = 1e-3;

struct GradCheckRecord {
  std::string module;  // primitives, vsa, vsgc, backbone
  std::string name;
  std::size_t seeds = 0;    // configurations checked
  std::size_t skipped = 0;  // draws rejected for lying near a kink
  double err_f64 = 0;       // worst relative error over all seeds
  double err_f32 = 0;
  std::size_t required = 0;

  bool passed() const { return seeds >= required && err_f64 < kGradTolF64 && err_f32 < kGradTolF32; }
};

/// Module names accepted by run_gradcheck_suite besides "all".
std::vector<std::string> gradcheck_modules();

/// Runs the checks of one module, or of all of them. Each case is checked on
/// `seeds` accepted configurations. ConfigError on an unknown module.
std::vector<GradCheckRecord> run_gradcheck_suite(std::string_view module, std::size_t seeds = 20);

}  // namespace sagc
