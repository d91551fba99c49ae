// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "sagc/tensor.hpp"

namespace sagc {

template <typename T>
using ScalarFn = std::function<Tensor<T>(const Tensor<T>&)>;

template <typename T>
using ScalarFnN = std::function<Tensor<T>(const std::vector<Tensor<T>>&)>;

struct GradCheckOptions {
  /// Check at most this many coordinates per call (0 = all). Sampled
  /// coordinates are drawn from `seed` so the selection is reproducible.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

/// Worst relative error between the reverse-mode gradient of scalar f at x
/// and a central finite-difference estimate, per coordinate, with
/// denominator max(|a|, |b|, 1e-8). The estimate uses the fourth-order
/// central stencil (-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h.
/// Throws ContractError if f is not scalar-valued or eps is outside [1e-7, 1e-3].
template <typename T>
double grad_check(const ScalarFn<T>& f, const Tensor<T>& x, double eps, const GradCheckOptions& opts = {});

/// Same check over several inputs at once (e.g. an input plus parameters).
template <typename T>
double grad_check(const ScalarFnN<T>& f, const std::vector<Tensor<T>>& inputs, double eps,
                  const GradCheckOptions& opts = {});

/// Reverse-mode gradients at precision T against finite differences of the
/// same function evaluated at precision U >= T. Inputs are given in double
/// and cast to both precisions. The denominator floor is
/// max(1e-8, 1024 u_T max_k |fd_k|), with u_T the unit roundoff of T. A
/// coordinate whose finite difference lies within the oracle's rounding
/// noise (64 u_U |f| / eps) has a derivative that is zero as far as can be
/// measured; its error is |a - fd| / max_k |fd_k| instead.
template <typename T, typename U>
double grad_check_mixed(const ScalarFnN<T>& f_lo, const ScalarFnN<U>& f_hi, const std::vector<Tensor<double>>& inputs,
                        double eps, const GradCheckOptions& opts = {});

/// f32 reverse mode against an f64 finite-difference oracle.
template <typename T>
double grad_check_against_f64(const ScalarFnN<T>& f_lo, const ScalarFnN<double>& f_hi,
                              const std::vector<Tensor<double>>& inputs, double eps,
                              const GradCheckOptions& opts = {}) {
  return grad_check_mixed<T, double>(f_lo, f_hi, inputs, eps, opts);
}

/// Checks a generic callable `fn(const std::vector<Tensor<X>>&) -> Tensor<X>`
/// at precision T, with the finite-difference oracle in extended precision.
template <typename T, typename F>
double grad_check_precise(F&& fn, const std::vector<Tensor<double>>& inputs, double eps,
                          const GradCheckOptions& opts = {}) {
  ScalarFnN<T> lo = fn;
  ScalarFnN<long double> hi = fn;
  return grad_check_mixed<T, long double>(lo, hi, inputs, eps, opts);
}

}  // namespace sagc
