// SPDX-License-Identifier: Apache-2.0
#include "sagc/objectives.hpp"

#include <cmath>
#include <cstring>

#include "sagc/errors.hpp"
#include "sagc/init.hpp"
#include "sagc/ops.hpp"

namespace sagc {

void LossWeights::validate() const {
  for (double v : {lambda_rec, lambda_syn, lambda_cl, perceptual_weight}) {
    if (!std::isfinite(v) || v < 0) throw ConfigError("loss weights must be finite and non-negative");
  }
}

PerceptualNet::PerceptualNet(std::uint64_t seed) : seed_(seed) {
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < kWidths.size(); ++l) {
    weights_.push_back(init::conv_he<float>(kWidths[l + 1], kWidths[l], 3, 3, rng));
    biases_.push_back(init::normal<float>({kWidths[l + 1]}, 0.1, rng));
  }
}

template <typename T>
std::vector<Tensor<T>> PerceptualNet::features(const Tensor<T>& x) const {
  std::vector<Tensor<T>> out;
  Tensor<T> h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = ops::gelu(ops::conv2d(h, weights_[l].cast<T>(), biases_[l].cast<T>(), 2, 1));
    out.push_back(h);
  }
  return out;
}

std::uint64_t PerceptualNet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const Tensor<float>& t) {
    for (float v : t.data()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      for (int i = 0; i < 4; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
      }
    }
  };
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    mix(weights_[l]);
    mix(biases_[l]);
  }
  return h;
}

namespace {

template <typename T>
void check_pair(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> slices,
                const char* what) {
  if (pred.ndim() != 3 || pred.shape() != target.shape()) {
    throw ContractError(std::string(what) + ": prediction " + to_string(pred.shape()) + " and target " +
                        to_string(target.shape()) + " must be equal [D, H, W] shapes");
  }
  if (slices.empty()) throw ContractError(std::string(what) + ": empty slice selection");
  for (auto s : slices) {
    if (s >= pred.dim(0)) throw ContractError(std::string(what) + ": slice index out of range");
  }
}

template <typename T>
Tensor<T> select_slices(const Tensor<T>& v, std::span<const std::size_t> slices) {
  const std::size_t h = v.dim(1), w = v.dim(2);
  return ops::gather_rows(ops::reshape(v, {v.dim(0), h * w}), slices);
}

}  // namespace

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> slices) {
  check_pair(pred, target, slices, "l1_loss");
  return ops::abs_mean(ops::sub(select_slices(pred, slices), select_slices(target, slices)));
}

template <typename T>
Tensor<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> slices,
                          const PerceptualNet& net) {
  check_pair(pred, target, slices, "perceptual_loss");
  const Shape s{slices.size(), 1, pred.dim(1), pred.dim(2)};
  const auto fp = net.features(ops::reshape(select_slices(pred, slices), s));
  const auto ft = net.features(ops::reshape(select_slices(target.detach(), slices), s));
  Tensor<T> acc = ops::abs_mean(ops::sub(fp[0], ft[0]));
  for (std::size_t l = 1; l < fp.size(); ++l) acc = ops::add(acc, ops::abs_mean(ops::sub(fp[l], ft[l])));
  return ops::scale(acc, T(1) / static_cast<T>(fp.size()));
}

template <typename T>
LossTerms<T> total_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> available,
                        std::span<const std::size_t> missing, const std::vector<Tensor<T>>& cl_losses,
                        const PerceptualNet& net, const LossWeights& w) {
  w.validate();
  if (available.empty()) throw ContractError("total_loss: every slice is missing");
  auto term = [&](std::span<const std::size_t> slices) {
    return ops::add(l1_loss(pred, target, slices),
                    ops::scale(perceptual_loss(pred, target, slices, net), static_cast<T>(w.perceptual_weight)));
  };
  LossTerms<T> out;
  out.rec = term(available);
  out.syn = missing.empty() ? Tensor<T>::zeros({1}) : term(missing);
  if (cl_losses.empty()) {
    out.cl = Tensor<T>::zeros({1});
  } else {
    Tensor<T> acc = cl_losses[0];
    for (std::size_t i = 1; i < cl_losses.size(); ++i) acc = ops::add(acc, cl_losses[i]);
    out.cl = ops::scale(acc, T(1) / static_cast<T>(cl_losses.size()));
  }
  out.total = ops::add(ops::add(ops::scale(out.rec, static_cast<T>(w.lambda_rec)),
                                ops::scale(out.syn, static_cast<T>(w.lambda_syn))),
                       ops::scale(out.cl, static_cast<T>(w.lambda_cl)));
  return out;
}

double combine_loss(double rec, double syn, double cl, const LossWeights& w) {
  return w.lambda_rec * rec + w.lambda_syn * syn + w.lambda_cl * cl;
}

#define SAGC_INSTANTIATE(T)                                                                                    \
  template std::vector<Tensor<T>> PerceptualNet::features(const Tensor<T>&) const;                             \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&, std::span<const std::size_t>);                \
  template Tensor<T> perceptual_loss(const Tensor<T>&, const Tensor<T>&, std::span<const std::size_t>,         \
                                     const PerceptualNet&);                                                    \
  template LossTerms<T> total_loss(const Tensor<T>&, const Tensor<T>&, std::span<const std::size_t>,           \
                                   std::span<const std::size_t>, const std::vector<Tensor<T>>&,                \
                                   const PerceptualNet&, const LossWeights&);

SAGC_INSTANTIATE(float)
SAGC_INSTANTIATE(double)
SAGC_INSTANTIATE(long double)

#undef SAGC_INSTANTIATE

}  // namespace sagc
