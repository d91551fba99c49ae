// SPDX-License-Identifier: Apache-2.0
#include "sagc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace sagc {
namespace {

struct Coord {
  std::size_t input;
  std::size_t index;
};

std::vector<Coord> pick_coords(const std::vector<std::size_t>& sizes, const GradCheckOptions& opts) {
  std::vector<Coord> all;
  for (std::size_t q = 0; q < sizes.size(); ++q)
    for (std::size_t i = 0; i < sizes[q]; ++i) all.push_back({q, i});
  if (opts.max_coords == 0 || all.size() <= opts.max_coords) return all;
  std::mt19937_64 rng(opts.seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(opts.max_coords);
  std::sort(all.begin(), all.end(), [](const Coord& a, const Coord& b) {
    return a.input != b.input ? a.input < b.input : a.index < b.index;
  });
  return all;
}

void check_eps(double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ContractError("grad_check: eps must lie in [1e-7, 1e-3], got " + std::to_string(eps));
  }
}

template <typename T>
T scalar_value(const Tensor<T>& y) {
  if (y.numel() != 1) throw ContractError("grad_check: function returned shape " + to_string(y.shape()));
  return y.item();
}

template <typename T>
std::vector<std::vector<T>> reverse_mode(const ScalarFnN<T>& f, const std::vector<Tensor<T>>& inputs) {
  std::vector<Tensor<T>> leaves;
  for (const auto& x : inputs) leaves.push_back(x.clone(true));
  auto y = f(leaves);
  scalar_value(y);
  y.backward();
  std::vector<std::vector<T>> grads;
  for (const auto& l : leaves) grads.push_back(l.grad());
  return grads;
}

// Fourth-order central difference of f along one coordinate, carried out at
// the evaluation precision so an extended-precision oracle keeps its digits.
template <typename T>
double finite_difference(const ScalarFnN<T>& f, const std::vector<Tensor<T>>& inputs, const Coord& c, double h) {
  std::vector<Tensor<T>> probe;
  for (const auto& x : inputs) probe.push_back(x.clone(false));
  const T x0 = inputs[c.input].at(c.index);
  const T step = static_cast<T>(h);
  auto eval = [&](int k) {
    probe[c.input].mutable_data()[c.index] = x0 + static_cast<T>(k) * step;
    return scalar_value(f(probe));
  };
  const T fp2 = eval(2), fp1 = eval(1), fm1 = eval(-1), fm2 = eval(-2);
  return static_cast<double>((T(8) * (fp1 - fm1) - (fp2 - fm2)) / (T(12) * step));
}

constexpr double kFloorUlps = 1024.0;
constexpr double kNoiseMargin = 64.0;

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

}  // namespace

template <typename T>
double grad_check(const ScalarFn<T>& f, const Tensor<T>& x, double eps, const GradCheckOptions& opts) {
  ScalarFnN<T> g = [&f](const std::vector<Tensor<T>>& in) { return f(in[0]); };
  return grad_check<T>(g, std::vector<Tensor<T>>{x}, eps, opts);
}

template <typename T>
double grad_check(const ScalarFnN<T>& f, const std::vector<Tensor<T>>& inputs, double eps,
                  const GradCheckOptions& opts) {
  check_eps(eps);
  const auto grads = reverse_mode(f, inputs);
  std::vector<std::size_t> sizes;
  for (const auto& x : inputs) sizes.push_back(x.numel());
  double worst = 0;
  for (const auto& c : pick_coords(sizes, opts)) {
    const double fd = finite_difference(f, inputs, c, eps);
    worst = std::max(worst, relative_error(static_cast<double>(grads[c.input][c.index]), fd));
  }
  return worst;
}

template <typename T, typename U>
double grad_check_mixed(const ScalarFnN<T>& f_lo, const ScalarFnN<U>& f_hi, const std::vector<Tensor<double>>& inputs,
                        double eps, const GradCheckOptions& opts) {
  check_eps(eps);
  std::vector<Tensor<T>> lo;
  std::vector<Tensor<U>> hi;
  for (const auto& x : inputs) {
    lo.push_back(x.template cast<T>());
    hi.push_back(x.template cast<U>());
  }
  const auto grads = reverse_mode(f_lo, lo);
  std::vector<std::size_t> sizes;
  for (const auto& x : inputs) sizes.push_back(x.numel());
  const auto coords = pick_coords(sizes, opts);
  std::vector<double> fd(coords.size());
  double scale = 0;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    fd[k] = finite_difference(f_hi, hi, coords[k], eps);
    scale = std::max(scale, std::abs(fd[k]));
  }
  const double floor = kFloorUlps * 0.5 * static_cast<double>(std::numeric_limits<T>::epsilon()) * scale;
  // Rounding noise of the oracle's stencil: about 1.5 u_U |f| / eps.
  const double f0 = std::abs(static_cast<double>(scalar_value(f_hi(hi))));
  const double noise = kNoiseMargin * 0.5 * static_cast<double>(std::numeric_limits<U>::epsilon()) * f0 / eps;
  double worst = 0;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const double a = static_cast<double>(grads[coords[k].input][coords[k].index]);
    const double diff = std::abs(a - fd[k]);
    if (std::abs(fd[k]) <= noise) {
      // The derivative is zero as far as the oracle can tell; relative error
      // is meaningless there, so compare against the gradient scale.
      worst = std::max(worst, diff / std::max(scale, 1e-8));
    } else {
      worst = std::max(worst, diff / std::max({std::abs(a), std::abs(fd[k]), 1e-8, floor}));
    }
  }
  return worst;
}

template double grad_check<float>(const ScalarFn<float>&, const Tensor<float>&, double, const GradCheckOptions&);
template double grad_check<double>(const ScalarFn<double>&, const Tensor<double>&, double, const GradCheckOptions&);
template double grad_check<float>(const ScalarFnN<float>&, const std::vector<Tensor<float>>&, double,
                                  const GradCheckOptions&);
template double grad_check<double>(const ScalarFnN<double>&, const std::vector<Tensor<double>>&, double,
                                   const GradCheckOptions&);
template double grad_check_mixed<float, double>(const ScalarFnN<float>&, const ScalarFnN<double>&,
                                                const std::vector<Tensor<double>>&, double, const GradCheckOptions&);
template double grad_check_mixed<float, long double>(const ScalarFnN<float>&, const ScalarFnN<long double>&,
                                                     const std::vector<Tensor<double>>&, double,
                                                     const GradCheckOptions&);
template double grad_check_mixed<double, long double>(const ScalarFnN<double>&, const ScalarFnN<long double>&,
                                                      const std::vector<Tensor<double>>&, double,
                                                      const GradCheckOptions&);

}  // namespace sagc
