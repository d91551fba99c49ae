// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every op validates shapes, computes its forward
// value eagerly and records a backward closure when an input needs a
// gradient. Loops run in a fixed order so results are bit-reproducible.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sagc/tensor.hpp"

namespace sagc::ops {

// Broadcasting binary ops (numpy rules, trailing-aligned).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T value);

// Unary elementwise.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
template <typename T> Tensor<T> elu(const Tensor<T>& x, T alpha = T(1));
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
template <typename T> Tensor<T> exp(const Tensor<T>& x);
template <typename T> Tensor<T> log(const Tensor<T>& x);
template <typename T> Tensor<T> abs(const Tensor<T>& x);

// Reductions to a scalar of shape [1].
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
/// mean(|x|) as a single node.
template <typename T> Tensor<T> abs_mean(const Tensor<T>& x);
/// Mean over one axis; that axis is removed from the shape.
template <typename T> Tensor<T> mean_axis(const Tensor<T>& x, int axis);

/// Cosine similarity of two equally shaped tensors read as flat vectors.
/// Throws DegenerateInputError if either is the zero vector.
template <typename T> Tensor<T> cosine_sim(const Tensor<T>& a, const Tensor<T>& b);
/// Each row divided by its L2 norm; a zero row is a DegenerateInputError.
template <typename T> Tensor<T> l2_normalize_rows(const Tensor<T>& x);

// Shape manipulation.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& x);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm);
template <typename T> Tensor<T> slice(const Tensor<T>& x, int axis, std::size_t start, std::size_t length);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);
/// Rows (slabs along axis 0) picked by index; indices may repeat.
template <typename T> Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows);
/// Row i of the result is a[i] where take_a[i] is set, else b[i].
template <typename T>
Tensor<T> row_select(std::span<const std::uint8_t> take_a, const Tensor<T>& a, const Tensor<T>& b);
/// Diagonal of a square matrix.
template <typename T> Tensor<T> diagonal(const Tensor<T>& x);

// Normalization and attention.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, int axis);
/// Row softmax restricted to entries with weight > 0, each term scaled by its
/// weight: out_ij = w_ij exp(x_ij) / sum_k w_ik exp(x_ik). Weights are constants.
template <typename T> Tensor<T> weighted_softmax_rows(const Tensor<T>& x, std::span<const T> weights);
/// log sum_{j : keep_ij} exp(x_ij) for each row; shape [n].
template <typename T>
Tensor<T> masked_logsumexp_rows(const Tensor<T>& x, std::span<const std::uint8_t> keep);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps);

// Convolutions.
/// x [C,D,H,W], kernel [C,kd,kh,kw] with odd extents, zero "same" padding.
template <typename T> Tensor<T> depthwise_conv3d(const Tensor<T>& x, const Tensor<T>& kernel);
/// x [B,Ci,H,W], weight [Co,Ci,kh,kw], optional bias [Co].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding);
/// Nearest-neighbour in-plane upsampling of [B,C,H,W].
template <typename T> Tensor<T> upsample_nearest2d(const Tensor<T>& x, std::size_t factor);

/// x [n,in] @ w [in,out] + b [out].
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

}  // namespace sagc::ops
