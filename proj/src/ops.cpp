// SPDX-License-Identifier: Apache-2.0
#include "sagc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace sagc::ops {
namespace {

template <typename T>
using Node = typename Tensor<T>::Node;

/// Inner product with eight interleaved partial sums so the loop vectorizes;
/// the summation order is fixed, so results are reproducible.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8)
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[j + l] * b[j + l];
  T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; j < n; ++j) s += a[j] * b[j];
  return s;
}

std::size_t normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

std::vector<std::size_t> contiguous_strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> a_stride;
  std::vector<std::size_t> b_stride;
  bool same = false;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t r = std::max(a.size(), b.size());
  Shape pa(r - a.size(), 1), pb(r - b.size(), 1);
  pa.insert(pa.end(), a.begin(), a.end());
  pb.insert(pb.end(), b.begin(), b.end());
  const auto sa = contiguous_strides(pa);
  const auto sb = contiguous_strides(pb);
  p.out.resize(r);
  p.a_stride.resize(r);
  p.b_stride.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw ShapeError(std::string(op) + ": shapes " + to_string(a) + " and " + to_string(b) +
                       " are not broadcast-compatible");
    }
    p.out[i] = std::max(pa[i], pb[i]);
    p.a_stride[i] = pa[i] == 1 ? 0 : sa[i];
    p.b_stride[i] = pb[i] == 1 ? 0 : sb[i];
  }
  return p;
}

// Calls f(out_index, a_index, b_index) for every output element.
template <typename F>
void for_each_broadcast(const BroadcastPlan& p, F&& f) {
  const std::size_t total = numel(p.out);
  if (p.same) {
    for (std::size_t i = 0; i < total; ++i) f(i, i, i);
    return;
  }
  const std::size_t r = p.out.size();
  const std::size_t inner = p.out[r - 1];
  const std::size_t sa = p.a_stride[r - 1], sb = p.b_stride[r - 1];
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < total; o += inner) {
    for (std::size_t j = 0; j < inner; ++j) f(o + j, ia + j * sa, ib + j * sb);
    for (std::size_t d = r - 1; d-- > 0;) {
      ++idx[d];
      ia += p.a_stride[d];
      ib += p.b_stride[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.a_stride[d] * p.out[d];
      ib -= p.b_stride[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

enum class BinOp { Add, Sub, Mul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinOp kind, const char* name) {
  auto plan = plan_broadcast(a.shape(), b.shape(), name);
  std::vector<T> out(numel(plan.out));
  const auto av = a.data();
  const auto bv = b.data();
  switch (kind) {
    case BinOp::Add:
      for_each_broadcast(plan, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = av[i] + bv[j]; });
      break;
    case BinOp::Sub:
      for_each_broadcast(plan, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = av[i] - bv[j]; });
      break;
    case BinOp::Mul:
      for_each_broadcast(plan, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = av[i] * bv[j]; });
      break;
  }
  Shape shape = plan.out;
  return Tensor<T>::from_op(std::move(shape), std::move(out), {a, b}, [a, b, plan, kind](const Node<T>& self) {
    T* ga = grad_target<T>(self, 0);
    T* gb = grad_target<T>(self, 1);
    const auto& g = self.grad;
    const auto av = a.data();
    const auto bv = b.data();
    for_each_broadcast(plan, [&](std::size_t o, std::size_t i, std::size_t j) {
      switch (kind) {
        case BinOp::Add:
          if (ga) ga[i] += g[o];
          if (gb) gb[j] += g[o];
          break;
        case BinOp::Sub:
          if (ga) ga[i] += g[o];
          if (gb) gb[j] -= g[o];
          break;
        case BinOp::Mul:
          if (ga) ga[i] += g[o] * bv[j];
          if (gb) gb[j] += g[o] * av[i];
          break;
      }
    });
  });
}

// Elementwise op with derivative expressed through input x and output y.
template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, F f, DF df) {
  const auto xv = x.data();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [x, df](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    const auto xv = x.data();
    const auto yv = self.values();
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * df(xv[i], yv[i]);
  });
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + " expects rank " + std::to_string(rank) + ", got " + to_string(s));
  }
}

// (outer, extent, inner) factorization around one axis.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::Add, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::Sub, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::Mul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(
      x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value) {
  return unary(
      x, [value](T v) { return v + value; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  constexpr T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
  return unary(
      x, [](T v) { return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); },
      [](T v, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
        const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
        return cdf + v * pdf;
      });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x,
      [](T v) {
        if (v >= 0) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> elu(const Tensor<T>& x, T alpha) {
  return unary(
      x, [alpha](T v) { return v > 0 ? v : alpha * std::expm1(v); },
      [alpha](T v, T y) { return v > 0 ? T(1) : y + alpha; });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return unary(
      x, [slope](T v) { return v > 0 ? v : slope * v; }, [slope](T v, T) { return v > 0 ? T(1) : slope; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  for (T v : x.data()) {
    if (!(v > 0)) throw DegenerateInputError("log of non-positive value");
  }
  return unary(
      x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return std::abs(v); }, [](T v, T) { return v > 0 ? T(1) : (v < 0 ? T(-1) : T(0)); });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.data()) s += v;
  return Tensor<T>::from_op(Shape{1}, {s}, {x}, [](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    const T g = self.grad[0];
    const std::size_t n = self.parents[0]->size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  const T inv = T(1) / static_cast<T>(x.numel());
  T s = 0;
  for (T v : x.data()) s += v;
  return Tensor<T>::from_op(Shape{1}, {s * inv}, {x}, [inv](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    const T g = self.grad[0] * inv;
    const std::size_t n = self.parents[0]->size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

template <typename T>
Tensor<T> abs_mean(const Tensor<T>& x) {
  const T inv = T(1) / static_cast<T>(x.numel());
  T s = 0;
  for (T v : x.data()) s += std::abs(v);
  return Tensor<T>::from_op(Shape{1}, {s * inv}, {x}, [x, inv](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    const T g = self.grad[0] * inv;
    const auto xv = x.data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > 0) gx[i] += g;
      else if (xv[i] < 0) gx[i] -= g;
    }
  });
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.ndim());
  const auto sp = split_axis(x.shape(), ax);
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(ax));
  if (shape.empty()) shape = {1};
  const T inv = T(1) / static_cast<T>(sp.extent);
  const auto xv = x.data();
  std::vector<T> out(sp.outer * sp.inner, T(0));
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t k = 0; k < sp.extent; ++k) {
      const T* src = xv.data() + (o * sp.extent + k) * sp.inner;
      T* dst = out.data() + o * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
    }
  for (auto& v : out) v *= inv;
  return Tensor<T>::from_op(std::move(shape), std::move(out), {x}, [sp, inv](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t k = 0; k < sp.extent; ++k) {
        T* dst = gx + (o * sp.extent + k) * sp.inner;
        const T* g = self.grad.data() + o * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += g[i] * inv;
      }
  });
}

template <typename T>
Tensor<T> cosine_sim(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.numel() != b.numel()) {
    throw ShapeError("cosine_sim: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) + " differ");
  }
  const auto av = a.data();
  const auto bv = b.data();
  T dot = 0, na2 = 0, nb2 = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    na2 += av[i] * av[i];
    nb2 += bv[i] * bv[i];
  }
  if (na2 == 0 || nb2 == 0) throw DegenerateInputError("cosine_sim of a zero vector");
  const T na = std::sqrt(na2), nb = std::sqrt(nb2);
  const T c = std::clamp(dot / (na * nb), T(-1), T(1));
  return Tensor<T>::from_op(Shape{1}, {c}, {a, b}, [a, b, na, nb, na2, nb2, dot](const Node<T>& self) {
    const T g = self.grad[0];
    const T cos = dot / (na * nb);
    const auto av = a.data();
    const auto bv = b.data();
    if (T* ga = grad_target<T>(self, 0))
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * (bv[i] / (na * nb) - cos * av[i] / na2);
    if (T* gb = grad_target<T>(self, 1))
      for (std::size_t i = 0; i < bv.size(); ++i) gb[i] += g * (av[i] / (na * nb) - cos * bv[i] / nb2);
  });
}

template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x) {
  require_rank(x.shape(), 2, "l2_normalize_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const auto xv = x.data();
  std::vector<T> out(xv.size());
  std::vector<T> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    T s = 0;
    for (std::size_t j = 0; j < d; ++j) s += xv[i * d + j] * xv[i * d + j];
    if (s == 0) throw DegenerateInputError("l2_normalize_rows: row " + std::to_string(i) + " is a zero vector");
    norms[i] = std::sqrt(s);
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[i * d + j] / norms[i];
  }
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [n, d, norms](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    const auto y = self.values();
    for (std::size_t i = 0; i < n; ++i) {
      T yg = 0;
      for (std::size_t j = 0; j < d; ++j) yg += y[i * d + j] * self.grad[i * d + j];
      for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += (self.grad[i * d + j] - y[i * d + j] * yg) / norms[i];
    }
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul");
  require_rank(b.shape(), 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree for " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const T* A = a.data().data();
  const T* B = b.data().data();
  std::vector<T> out(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* C = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A[i * k + p];
      const T* Brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) C[j] += av * Brow[j];
    }
  }
  return Tensor<T>::from_op(Shape{m, n}, std::move(out), {a, b}, [a, b, m, k, n](const Node<T>& self) {
    const T* G = self.grad.data();
    const T* A = a.data().data();
    const T* B = b.data().data();
    if (T* ga = grad_target<T>(self, 0)) {
      if (n >= k) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += dot(G + i * n, B + p * n, n);
      } else {
        // Short rows: accumulate along k from a transposed copy of b instead.
        std::vector<T> bt(n * k);
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = B[p * n + j];
        for (std::size_t i = 0; i < m; ++i) {
          T* dst = ga + i * k;
          for (std::size_t j = 0; j < n; ++j) {
            const T gv = G[i * n + j];
            const T* src = bt.data() + j * k;
            for (std::size_t p = 0; p < k; ++p) dst[p] += gv * src[p];
          }
        }
      }
    }
    if (T* gb = grad_target<T>(self, 1)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const T av = A[i * k + p];
          const T* Grow = G + i * n;
          T* dst = gb + p * n;
          for (std::size_t j = 0; j < n; ++j) dst[j] += av * Grow[j];
        }
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank(x.shape(), 2, "transpose");
  return permute(x, {1, 0});
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return Tensor<T>::from_op(std::move(shape), std::move(out), {x}, [](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  const std::size_t r = x.ndim();
  if (perm.size() != r) throw ShapeError("permute: permutation rank differs from " + to_string(x.shape()));
  std::vector<bool> used(r, false);
  for (auto p : perm) {
    if (p >= r || used[p]) throw ShapeError("permute: invalid permutation for " + to_string(x.shape()));
    used[p] = true;
  }
  const auto in_stride = contiguous_strides(x.shape());
  Shape out_shape(r);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[perm[i]];
    src_stride[i] = in_stride[perm[i]];
  }
  // Source index of every output element, in output order.
  const std::size_t total = x.numel();
  std::vector<std::size_t> src(total);
  {
    std::vector<std::size_t> idx(r, 0);
    std::size_t s = 0;
    for (std::size_t o = 0; o < total; ++o) {
      src[o] = s;
      for (std::size_t d = r; d-- > 0;) {
        ++idx[d];
        s += src_stride[d];
        if (idx[d] < out_shape[d]) break;
        s -= src_stride[d] * out_shape[d];
        idx[d] = 0;
      }
    }
  }
  const auto xv = x.data();
  std::vector<T> out(total);
  for (std::size_t o = 0; o < total; ++o) out[o] = xv[src[o]];
  return Tensor<T>::from_op(std::move(out_shape), std::move(out), {x},
                            [src = std::move(src)](const Node<T>& self) {
                              T* gx = grad_target<T>(self, 0);
                              if (!gx) return;
                              for (std::size_t o = 0; o < src.size(); ++o) gx[src[o]] += self.grad[o];
                            });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::size_t start, std::size_t length) {
  const std::size_t ax = normalize_axis(axis, x.ndim());
  const auto sp = split_axis(x.shape(), ax);
  if (length == 0 || start + length > sp.extent) {
    throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) + ") out of range on axis " +
                     std::to_string(ax) + " of " + to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[ax] = length;
  const auto xv = x.data();
  std::vector<T> out(sp.outer * length * sp.inner);
  const std::size_t block = length * sp.inner;
  for (std::size_t o = 0; o < sp.outer; ++o) {
    const T* src = xv.data() + (o * sp.extent + start) * sp.inner;
    std::copy(src, src + block, out.data() + o * block);
  }
  return Tensor<T>::from_op(std::move(shape), std::move(out), {x}, [sp, start, block](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      T* dst = gx + (o * sp.extent + start) * sp.inner;
      const T* g = self.grad.data() + o * block;
      for (std::size_t i = 0; i < block; ++i) dst[i] += g[i];
    }
  });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const std::size_t ax = normalize_axis(axis, parts[0].ndim());
  Shape shape = parts[0].shape();
  std::size_t total_extent = 0;
  for (const auto& p : parts) {
    Shape a = p.shape(), b = parts[0].shape();
    if (a.size() != b.size()) throw ShapeError("concat: rank mismatch " + to_string(a) + " vs " + to_string(b));
    a[ax] = b[ax] = 0;
    if (a != b) throw ShapeError("concat: shapes " + to_string(p.shape()) + " and " + to_string(parts[0].shape()) +
                                 " differ off axis " + std::to_string(ax));
    total_extent += p.shape()[ax];
  }
  shape[ax] = total_extent;
  const auto sp = split_axis(shape, ax);
  std::vector<T> out(numel(shape));
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t block = p.shape()[ax] * sp.inner;
    const auto pv = p.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy(pv.data() + o * block, pv.data() + (o + 1) * block,
                out.data() + (o * total_extent + off) * sp.inner);
    off += p.shape()[ax];
  }
  std::vector<std::size_t> extents;
  for (const auto& p : parts) extents.push_back(p.shape()[ax]);
  return Tensor<T>::from_op(std::move(shape), std::move(out), parts,
                            [sp, total_extent, offsets, extents](const Node<T>& self) {
                              for (std::size_t q = 0; q < offsets.size(); ++q) {
                                T* gp = grad_target<T>(self, q);
                                if (!gp) continue;
                                const std::size_t block = extents[q] * sp.inner;
                                for (std::size_t o = 0; o < sp.outer; ++o) {
                                  const T* g = self.grad.data() + (o * total_extent + offsets[q]) * sp.inner;
                                  T* dst = gp + o * block;
                                  for (std::size_t i = 0; i < block; ++i) dst[i] += g[i];
                                }
                              }
                            });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ShapeError("gather_rows: empty index list");
  const std::size_t n = x.dim(0);
  const std::size_t row = x.numel() / n;
  for (auto r : rows) {
    if (r >= n) throw ShapeError("gather_rows: index " + std::to_string(r) + " out of range for " + to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[0] = rows.size();
  const auto xv = x.data();
  std::vector<T> out(rows.size() * row);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(xv.data() + rows[i] * row, xv.data() + (rows[i] + 1) * row, out.data() + i * row);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return Tensor<T>::from_op(std::move(shape), std::move(out), {x}, [idx, row](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const T* g = self.grad.data() + i * row;
      T* dst = gx + idx[i] * row;
      for (std::size_t j = 0; j < row; ++j) dst[j] += g[j];
    }
  });
}

template <typename T>
Tensor<T> row_select(std::span<const std::uint8_t> take_a, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("row_select: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) + " differ");
  }
  const std::size_t n = a.dim(0);
  if (take_a.size() != n) throw ShapeError("row_select: selector length differs from " + to_string(a.shape()));
  const std::size_t row = a.numel() / n;
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = take_a[i] ? a.data() : b.data();
    std::copy(src.data() + i * row, src.data() + (i + 1) * row, out.data() + i * row);
  }
  std::vector<std::uint8_t> sel(take_a.begin(), take_a.end());
  return Tensor<T>::from_op(a.shape(), std::move(out), {a, b}, [sel, row](const Node<T>& self) {
    T* ga = grad_target<T>(self, 0);
    T* gb = grad_target<T>(self, 1);
    for (std::size_t i = 0; i < sel.size(); ++i) {
      T* dst = sel[i] ? ga : gb;
      if (!dst) continue;
      for (std::size_t j = 0; j < row; ++j) dst[i * row + j] += self.grad[i * row + j];
    }
  });
}

template <typename T>
Tensor<T> diagonal(const Tensor<T>& x) {
  require_rank(x.shape(), 2, "diagonal");
  const std::size_t n = x.dim(0);
  if (x.dim(1) != n) throw ShapeError("diagonal of non-square " + to_string(x.shape()));
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x.at(i * n + i);
  return Tensor<T>::from_op(Shape{n}, std::move(out), {x}, [n](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < n; ++i) gx[i * n + i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.ndim());
  const auto sp = split_axis(x.shape(), ax);
  const auto xv = x.data();
  std::vector<T> out(xv.size());
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t base = o * sp.extent * sp.inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < sp.extent; ++k) mx = std::max(mx, xv[base + k * sp.inner]);
      T s = 0;
      for (std::size_t k = 0; k < sp.extent; ++k) {
        const T e = std::exp(xv[base + k * sp.inner] - mx);
        out[base + k * sp.inner] = e;
        s += e;
      }
      for (std::size_t k = 0; k < sp.extent; ++k) out[base + k * sp.inner] /= s;
    }
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [sp](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    const auto y = self.values();
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const std::size_t base = o * sp.extent * sp.inner + i;
        T dot = 0;
        for (std::size_t k = 0; k < sp.extent; ++k) dot += y[base + k * sp.inner] * self.grad[base + k * sp.inner];
        for (std::size_t k = 0; k < sp.extent; ++k) {
          const std::size_t q = base + k * sp.inner;
          gx[q] += y[q] * (self.grad[q] - dot);
        }
      }
  });
}

template <typename T>
Tensor<T> weighted_softmax_rows(const Tensor<T>& x, std::span<const T> weights) {
  require_rank(x.shape(), 2, "weighted_softmax_rows");
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (weights.size() != n * m) throw ShapeError("weighted_softmax_rows: weight count differs from " + to_string(x.shape()));
  const auto xv = x.data();
  std::vector<T> out(n * m, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (weights[i * m + j] > 0) mx = std::max(mx, xv[i * m + j]);
    if (mx == -std::numeric_limits<T>::infinity()) {
      throw ContractError("weighted_softmax_rows: row " + std::to_string(i) + " has no positive weight");
    }
    T s = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const T w = weights[i * m + j];
      if (w > 0) {
        out[i * m + j] = w * std::exp(xv[i * m + j] - mx);
        s += out[i * m + j];
      }
    }
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= s;
  }
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [n, m](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    const auto y = self.values();
    for (std::size_t i = 0; i < n; ++i) {
      T dot = 0;
      for (std::size_t j = 0; j < m; ++j) dot += y[i * m + j] * self.grad[i * m + j];
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += y[i * m + j] * (self.grad[i * m + j] - dot);
    }
  });
}

template <typename T>
Tensor<T> masked_logsumexp_rows(const Tensor<T>& x, std::span<const std::uint8_t> keep) {
  require_rank(x.shape(), 2, "masked_logsumexp_rows");
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (keep.size() != n * m) throw ShapeError("masked_logsumexp_rows: mask size differs from " + to_string(x.shape()));
  const auto xv = x.data();
  std::vector<T> out(n);
  std::vector<T> probs(n * m, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (keep[i * m + j]) mx = std::max(mx, xv[i * m + j]);
    if (mx == -std::numeric_limits<T>::infinity()) {
      throw ContractError("masked_logsumexp_rows: row " + std::to_string(i) + " keeps no entries");
    }
    T s = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (keep[i * m + j]) {
        probs[i * m + j] = std::exp(xv[i * m + j] - mx);
        s += probs[i * m + j];
      }
    for (std::size_t j = 0; j < m; ++j) probs[i * m + j] /= s;
    out[i] = mx + std::log(s);
  }
  return Tensor<T>::from_op(Shape{n}, std::move(out), {x}, [n, m, probs](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += self.grad[i] * probs[i * m + j];
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (!(eps > 0)) throw ConfigError("layer_norm: eps must be positive");
  const std::size_t d = x.dim(-1);
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: gamma " + to_string(gamma.shape()) + " / beta " + to_string(beta.shape()) +
                     " do not match last axis of " + to_string(x.shape()));
  }
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<T> out(xv.size()), xhat(xv.size()), rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(d);
    rstd[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (xr[j] - mu) * rstd[r];
      out[r * d + j] = xhat[r * d + j] * gv[j] + bv[j];
    }
  }
  return Tensor<T>::from_op(x.shape(), std::move(out), {x, gamma, beta},
                            [gamma, d, rows, xhat = std::move(xhat), rstd = std::move(rstd)](const Node<T>& self) {
                              T* gx = grad_target<T>(self, 0);
                              T* gg = grad_target<T>(self, 1);
                              T* gb = grad_target<T>(self, 2);
                              const auto gv = gamma.data();
                              const T inv_d = T(1) / static_cast<T>(d);
                              for (std::size_t r = 0; r < rows; ++r) {
                                const T* g = self.grad.data() + r * d;
                                const T* xh = xhat.data() + r * d;
                                if (gg)
                                  for (std::size_t j = 0; j < d; ++j) gg[j] += g[j] * xh[j];
                                if (gb)
                                  for (std::size_t j = 0; j < d; ++j) gb[j] += g[j];
                                if (gx) {
                                  T s1 = 0, s2 = 0;
                                  for (std::size_t j = 0; j < d; ++j) {
                                    const T gh = g[j] * gv[j];
                                    s1 += gh;
                                    s2 += gh * xh[j];
                                  }
                                  for (std::size_t j = 0; j < d; ++j) {
                                    const T gh = g[j] * gv[j];
                                    gx[r * d + j] += rstd[r] * (gh - inv_d * s1 - xh[j] * inv_d * s2);
                                  }
                                }
                              }
                            });
}

template <typename T>
Tensor<T> depthwise_conv3d(const Tensor<T>& x, const Tensor<T>& kernel) {
  require_rank(x.shape(), 4, "depthwise_conv3d input");
  require_rank(kernel.shape(), 4, "depthwise_conv3d kernel");
  const std::size_t C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t KD = kernel.dim(1), KH = kernel.dim(2), KW = kernel.dim(3);
  if (kernel.dim(0) != C) {
    throw ShapeError("depthwise_conv3d: kernel " + to_string(kernel.shape()) + " does not match input " +
                     to_string(x.shape()));
  }
  if (KD % 2 == 0 || KH % 2 == 0 || KW % 2 == 0) {
    throw ConfigError("depthwise_conv3d: kernel extents must be odd, got " + to_string(kernel.shape()));
  }
  const long pd = static_cast<long>(KD / 2), ph = static_cast<long>(KH / 2), pw = static_cast<long>(KW / 2);
  const long Dl = static_cast<long>(D), Hl = static_cast<long>(H), Wl = static_cast<long>(W);

  // Visits (output offset, input offset, kernel offset, run length) for
  // every contiguous in-range run along W.
  auto sweep = [=](auto&& fn) {
    for (std::size_t c = 0; c < C; ++c)
      for (long kz = 0; kz < static_cast<long>(KD); ++kz)
        for (long ky = 0; ky < static_cast<long>(KH); ++ky)
          for (long kx = 0; kx < static_cast<long>(KW); ++kx) {
            const std::size_t kidx = ((c * KD + kz) * KH + ky) * KW + kx;
            const long dx = kx - pw;
            const long x0 = std::max(0L, -dx), x1 = std::min(Wl, Wl - dx);
            if (x0 >= x1) continue;
            for (long z = 0; z < Dl; ++z) {
              const long iz = z + kz - pd;
              if (iz < 0 || iz >= Dl) continue;
              for (long y = 0; y < Hl; ++y) {
                const long iy = y + ky - ph;
                if (iy < 0 || iy >= Hl) continue;
                const std::size_t out_off = ((c * D + z) * H + y) * W + x0;
                const std::size_t in_off = ((c * D + iz) * H + iy) * W + (x0 + dx);
                fn(out_off, in_off, kidx, static_cast<std::size_t>(x1 - x0));
              }
            }
          }
  };

  const T* xv = x.data().data();
  const T* kv = kernel.data().data();
  std::vector<T> out(x.numel(), T(0));
  sweep([&](std::size_t o, std::size_t i, std::size_t k, std::size_t len) {
    const T w = kv[k];
    for (std::size_t j = 0; j < len; ++j) out[o + j] += w * xv[i + j];
  });
  return Tensor<T>::from_op(x.shape(), std::move(out), {x, kernel}, [x, kernel, sweep](const Node<T>& self) {
    T* gx = grad_target<T>(self, 0);
    T* gk = grad_target<T>(self, 1);
    const T* xv = x.data().data();
    const T* kv = kernel.data().data();
    const T* g = self.grad.data();
    sweep([&](std::size_t o, std::size_t i, std::size_t k, std::size_t len) {
      if (gx) {
        const T w = kv[k];
        for (std::size_t j = 0; j < len; ++j) gx[i + j] += w * g[o + j];
      }
      if (gk) {
        T s = 0;
        for (std::size_t j = 0; j < len; ++j) s += g[o + j] * xv[i + j];
        gk[k] += s;
      }
    });
  });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  require_rank(x.shape(), 4, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const std::size_t B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t Co = weight.dim(0), KH = weight.dim(2), KW = weight.dim(3);
  if (weight.dim(1) != Ci) {
    throw ShapeError("conv2d: weight " + to_string(weight.shape()) + " does not match input " + to_string(x.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{Co}) {
    throw ShapeError("conv2d: bias " + to_string(bias.shape()) + " does not match " + std::to_string(Co) + " outputs");
  }
  if (H + 2 * padding < KH || W + 2 * padding < KW) {
    throw ShapeError("conv2d: kernel " + to_string(weight.shape()) + " larger than padded input " + to_string(x.shape()));
  }
  const std::size_t Ho = (H + 2 * padding - KH) / stride + 1;
  const std::size_t Wo = (W + 2 * padding - KW) / stride + 1;
  const std::size_t rows = Ci * KH * KW, cols = Ho * Wo;

  // Patch matrix [Ci*KH*KW, Ho*Wo] of one batch item, zero outside the input.
  auto for_each_tap = [=](std::size_t b, auto&& fn) {
    for (std::size_t ci = 0; ci < Ci; ++ci)
      for (std::size_t ky = 0; ky < KH; ++ky)
        for (std::size_t kx = 0; kx < KW; ++kx) {
          const std::size_t r = (ci * KH + ky) * KW + kx;
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
            if (iy < 0 || iy >= static_cast<long>(H)) continue;
            for (std::size_t ox = 0; ox < Wo; ++ox) {
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
              if (ix < 0 || ix >= static_cast<long>(W)) continue;
              fn(r * cols + oy * Wo + ox, ((b * Ci + ci) * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix));
            }
          }
        }
  };

  const T* xv = x.data().data();
  const T* wv = weight.data().data();
  std::vector<T> out(B * Co * cols, T(0));
  std::vector<T> col(rows * cols);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(col.begin(), col.end(), T(0));
    for_each_tap(b, [&](std::size_t c, std::size_t i) { col[c] = xv[i]; });
    for (std::size_t co = 0; co < Co; ++co) {
      T* dst = out.data() + (b * Co + co) * cols;
      if (bias.defined()) std::fill_n(dst, cols, bias.data()[co]);
      for (std::size_t r = 0; r < rows; ++r) {
        const T w = wv[co * rows + r];
        const T* src = col.data() + r * cols;
        for (std::size_t j = 0; j < cols; ++j) dst[j] += w * src[j];
      }
    }
  }

  std::vector<Tensor<T>> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  const bool has_bias = bias.defined();
  return Tensor<T>::from_op(
      Shape{B, Co, Ho, Wo}, std::move(out), std::move(parents),
      [x, weight, for_each_tap, has_bias, B, Co, rows, cols](const Node<T>& self) {
        T* gx = grad_target<T>(self, 0);
        T* gw = grad_target<T>(self, 1);
        const T* xv = x.data().data();
        const T* wv = weight.data().data();
        const T* g = self.grad.data();
        std::vector<T> col(rows * cols), gcol;
        if (gx) gcol.resize(rows * cols);
        for (std::size_t b = 0; b < B; ++b) {
          const T* gb = g + b * Co * cols;
          if (gw) {
            std::fill(col.begin(), col.end(), T(0));
            for_each_tap(b, [&](std::size_t c, std::size_t i) { col[c] = xv[i]; });
            for (std::size_t co = 0; co < Co; ++co)
              for (std::size_t r = 0; r < rows; ++r) gw[co * rows + r] += dot(gb + co * cols, col.data() + r * cols, cols);
          }
          if (gx) {
            std::fill(gcol.begin(), gcol.end(), T(0));
            for (std::size_t co = 0; co < Co; ++co)
              for (std::size_t r = 0; r < rows; ++r) {
                const T w = wv[co * rows + r];
                T* dst = gcol.data() + r * cols;
                const T* src = gb + co * cols;
                for (std::size_t j = 0; j < cols; ++j) dst[j] += w * src[j];
              }
            for_each_tap(b, [&](std::size_t c, std::size_t i) { gx[i] += gcol[c]; });
          }
        }
        if (has_bias) {
          if (T* gbias = grad_target<T>(self, 2)) {
            for (std::size_t b = 0; b < B; ++b)
              for (std::size_t co = 0; co < Co; ++co) {
                const T* gp = g + (b * Co + co) * cols;
                T acc = 0;
                for (std::size_t j = 0; j < cols; ++j) acc += gp[j];
                gbias[co] += acc;
              }
          }
        }
      });
}

template <typename T>
Tensor<T> upsample_nearest2d(const Tensor<T>& x, std::size_t factor) {
  require_rank(x.shape(), 4, "upsample_nearest2d");
  if (factor == 0) throw ConfigError("upsample_nearest2d: factor must be positive");
  const std::size_t planes = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t Ho = H * factor, Wo = W * factor;
  const auto xv = x.data();
  std::vector<T> out(planes * Ho * Wo);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xo = 0; xo < Wo; ++xo)
        out[(p * Ho + y) * Wo + xo] = xv[(p * H + y / factor) * W + xo / factor];
  return Tensor<T>::from_op(Shape{x.dim(0), x.dim(1), Ho, Wo}, std::move(out), {x},
                            [planes, H, W, Ho, Wo, factor](const Node<T>& self) {
                              T* gx = grad_target<T>(self, 0);
                              if (!gx) return;
                              for (std::size_t p = 0; p < planes; ++p)
                                for (std::size_t y = 0; y < Ho; ++y)
                                  for (std::size_t xo = 0; xo < Wo; ++xo)
                                    gx[(p * H + y / factor) * W + xo / factor] += self.grad[(p * Ho + y) * Wo + xo];
                            });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  auto y = matmul(x, w);
  return b.defined() ? add(y, b) : y;
}

#define SAGC_INSTANTIATE_OPS(T)                                                                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> scale(const Tensor<T>&, T);                                                       \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                  \
  template Tensor<T> gelu(const Tensor<T>&);                                                           \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                        \
  template Tensor<T> tanh(const Tensor<T>&);                                                           \
  template Tensor<T> elu(const Tensor<T>&, T);                                                         \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                  \
  template Tensor<T> exp(const Tensor<T>&);                                                            \
  template Tensor<T> log(const Tensor<T>&);                                                            \
  template Tensor<T> abs(const Tensor<T>&);                                                            \
  template Tensor<T> sum(const Tensor<T>&);                                                            \
  template Tensor<T> mean(const Tensor<T>&);                                                           \
  template Tensor<T> abs_mean(const Tensor<T>&);                                                       \
  template Tensor<T> mean_axis(const Tensor<T>&, int);                                                 \
  template Tensor<T> cosine_sim(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&);                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> transpose(const Tensor<T>&);                                                      \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                 \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                       \
  template Tensor<T> slice(const Tensor<T>&, int, std::size_t, std::size_t);                           \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                                       \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                      \
  template Tensor<T> row_select(std::span<const std::uint8_t>, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> diagonal(const Tensor<T>&);                                                       \
  template Tensor<T> softmax(const Tensor<T>&, int);                                                   \
  template Tensor<T> weighted_softmax_rows(const Tensor<T>&, std::span<const T>);                      \
  template Tensor<T> masked_logsumexp_rows(const Tensor<T>&, std::span<const std::uint8_t>);           \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);              \
  template Tensor<T> depthwise_conv3d(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,         \
                            std::size_t);                                                              \
  template Tensor<T> upsample_nearest2d(const Tensor<T>&, std::size_t);                                \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

SAGC_INSTANTIATE_OPS(float)
SAGC_INSTANTIATE_OPS(double)
SAGC_INSTANTIATE_OPS(long double)

#undef SAGC_INSTANTIATE_OPS

}  // namespace sagc::ops
