// SPDX-License-Identifier: Apache-2.0
#include "sagc/slice_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sagc/init.hpp"
#include "sagc/ops.hpp"

namespace sagc {

namespace {

constexpr double kGatSlope = 0.2;

template <typename T>
std::vector<double> to_double(std::span<const T> v) {
  return {v.begin(), v.end()};
}

std::vector<std::uint8_t> available_rows(std::span<const std::uint8_t> missing) {
  std::vector<std::uint8_t> keep(missing.size());
  for (std::size_t i = 0; i < missing.size(); ++i) keep[i] = missing[i] ? 0 : 1;
  return keep;
}

}  // namespace

template <typename T>
Tensor<T> knn_graph(const Tensor<T>& x, std::size_t k, KnnMetric metric) {
  if (x.ndim() != 2) throw ShapeError("knn_graph: expected [n, d], got " + to_string(x.shape()));
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (k == 0 || k >= n) {
    throw ConfigError("knn_graph: k=" + std::to_string(k) + " must be in [1, " + std::to_string(n - 1) + "]");
  }
  const auto v = to_double(x.data());
  std::vector<double> norm(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) norm[i] += v[i * d + c] * v[i * d + c];
  for (auto& s : norm) s = std::sqrt(s);

  auto distance = [&](std::size_t i, std::size_t j) {
    double dot = 0, sq = 0;
    for (std::size_t c = 0; c < d; ++c) {
      dot += v[i * d + c] * v[j * d + c];
      const double diff = v[i * d + c] - v[j * d + c];
      sq += diff * diff;
    }
    if (metric == KnnMetric::euclidean) return sq;
    if (norm[i] == 0.0 || norm[j] == 0.0) return 1.0;
    return 1.0 - dot / (norm[i] * norm[j]);
  };

  std::vector<T> adj(n * n, T(0));
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(distance(i, j), j);
    std::sort(cand.begin(), cand.end());
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = cand[r].second;
      adj[i * n + j] = adj[j * n + i] = T(1);
    }
  }
  return Tensor<T>({n, n}, std::move(adj));
}

std::vector<std::uint8_t> incomplete_edges(std::span<const double> adj, std::span<const std::uint8_t> missing) {
  const std::size_t n = missing.size();
  if (adj.size() != n * n) throw ShapeError("incomplete_edges: adjacency does not match node count");
  std::vector<std::uint8_t> out(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj[i * n + j] != 0.0 && (missing[i] || missing[j])) out[i * n + j] = 1;
  return out;
}

template <typename T>
Tensor<T> attribute_view(const Tensor<T>& x, std::span<const std::uint8_t> missing, const Tensor<T>& completion) {
  const std::size_t n = x.dim(0);
  if (missing.size() != n) throw ShapeError("attribute_view: missing flags do not match node count");
  if (completion.ndim() != 2 || completion.dim(1) != x.dim(1) || completion.dim(0) < n) {
    throw ShapeError("attribute_view: completion " + to_string(completion.shape()) + " cannot cover nodes " +
                     to_string(x.shape()));
  }
  const auto keep = available_rows(missing);
  return ops::row_select<T>(keep, x, ops::slice(completion, 0, 0, n));
}

std::vector<double> ppr_matrix(std::span<const double> adj, std::size_t n, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ppr alpha must lie in (0, 1], got " + std::to_string(alpha));
  if (adj.size() != n * n) throw ShapeError("ppr_matrix: adjacency is not n x n");
  // Augmented system [M | alpha I] with M = I - (1 - alpha) P, P = D^-1 (A + I).
  const std::size_t w = 2 * n;
  std::vector<double> a(n * w, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) deg += adj[i * n + j];
    for (std::size_t j = 0; j < n; ++j) {
      const double p = ((j == i) ? 1.0 : adj[i * n + j]) / deg;
      a[i * w + j] = (i == j ? 1.0 : 0.0) - (1.0 - alpha) * p;
    }
    a[i * w + n + i] = alpha;
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * w + col]) > std::fabs(a[piv * w + col])) piv = r;
    if (std::fabs(a[piv * w + col]) < 1e-300) throw NumericError("ppr_matrix: singular propagation system");
    if (piv != col)
      for (std::size_t c = 0; c < w; ++c) std::swap(a[piv * w + c], a[col * w + c]);
    const double inv = 1.0 / a[col * w + col];
    for (std::size_t c = 0; c < w; ++c) a[col * w + c] *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * w + col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) a[r * w + c] -= f * a[col * w + c];
    }
  }
  std::vector<double> pi(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) pi[i * n + j] = a[i * w + n + j];
  return pi;
}

template <typename T>
StructureView<T> structure_view(const Tensor<T>& x, const Tensor<T>& adj, std::span<const std::uint8_t> missing,
                                double alpha) {
  const std::size_t n = x.dim(0);
  if (adj.ndim() != 2 || adj.dim(0) != n || adj.dim(1) != n || missing.size() != n) {
    throw ShapeError("structure_view: adjacency " + to_string(adj.shape()) + " does not match nodes " +
                     to_string(x.shape()));
  }
  const auto pi = ppr_matrix(to_double(adj.data()), n, alpha);
  Tensor<T> pi_t({n, n}, std::vector<T>(pi.begin(), pi.end()));
  const auto keep = available_rows(missing);
  auto x0 = ops::row_select<T>(keep, x, Tensor<T>::zeros(x.shape()));
  return {ops::matmul(pi_t, x0), pi_t};
}

template <typename T>
GatParams<T> GatParams<T>::init(std::size_t in_dim, std::size_t out_dim, std::size_t n_layers, Rng& rng) {
  if (n_layers == 0) throw ConfigError("GAT needs at least one layer");
  GatParams p;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = l == 0 ? in_dim : out_dim;
    GatLayer<T> layer;
    layer.w = init::xavier<T>(in, out_dim, rng);
    layer.a_src = init::normal<T>({out_dim, 1}, 0.1, rng);
    layer.a_dst = init::normal<T>({out_dim, 1}, 0.1, rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

template <typename T>
GatOutput<T> gat_forward(const Tensor<T>& x, const Tensor<T>& adj, const GatParams<T>& params) {
  const std::size_t n = x.dim(0);
  if (adj.ndim() != 2 || adj.dim(0) != n || adj.dim(1) != n) {
    throw ShapeError("gat_forward: adjacency " + to_string(adj.shape()) + " for " + std::to_string(n) + " nodes");
  }
  std::vector<T> weights(adj.data().begin(), adj.data().end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (weights[i * n + j] < T(0)) throw ContractError("gat_forward: negative adjacency entry");
    if (weights[i * n + i] == T(0)) weights[i * n + i] = T(1);
  }
  GatOutput<T> out;
  Tensor<T> h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    auto wh = ops::matmul(h, layer.w);
    auto logits = ops::add(ops::matmul(wh, layer.a_src), ops::transpose(ops::matmul(wh, layer.a_dst)));
    auto att = ops::weighted_softmax_rows(ops::leaky_relu(logits, T(kGatSlope)), std::span<const T>(weights));
    h = ops::matmul(att, wh);
    if (l + 1 < params.layers.size()) h = ops::elu(h);
    out.attention.push_back(att);
    out.logits.push_back(logits.detach());
  }
  out.z = h;
  return out;
}

template <typename T>
double kink_margin(const GatOutput<T>& out, const Tensor<T>& adj) {
  const std::size_t n = adj.dim(0);
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& lg : out.logits)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i == j || adj.at(i * n + j) > T(0)) margin = std::min(margin, std::fabs(static_cast<double>(lg.at(i * n + j))));
  return margin;
}

template <typename T>
Tensor<T> contrastive_loss(const Tensor<T>& z_a, const Tensor<T>& z_s, double tau) {
  if (!(tau > 0.0)) throw ContractError("contrastive_loss: tau must be positive");
  if (z_a.shape() != z_s.shape() || z_a.ndim() != 2) {
    throw ShapeError("contrastive_loss: views " + to_string(z_a.shape()) + " and " + to_string(z_s.shape()));
  }
  const std::size_t n = z_a.dim(0);
  if (n < 2) throw ContractError("contrastive_loss: needs at least 2 nodes for a negative set");
  auto sim = ops::scale(ops::matmul(ops::l2_normalize_rows(z_a), ops::transpose(ops::l2_normalize_rows(z_s))),
                        static_cast<T>(1.0 / tau));
  std::vector<std::uint8_t> off(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) off[i * n + i] = 0;
  auto lse_a = ops::masked_logsumexp_rows<T>(sim, off);
  auto lse_s = ops::masked_logsumexp_rows<T>(ops::transpose(sim), off);
  auto terms = ops::sub(ops::sub(ops::scale(ops::diagonal(sim), T(2)), lse_a), lse_s);
  return ops::scale(ops::sum(terms), static_cast<T>(-1.0 / (2.0 * static_cast<double>(n))));
}

template <typename T>
VsgcParams<T> VsgcParams<T>::init(std::size_t channels, std::size_t node_dim, std::size_t gat_dim,
                                  std::size_t gat_layers, std::size_t max_slices, Rng& rng) {
  VsgcParams p;
  p.node_w = init::xavier<T>(channels, node_dim, rng);
  p.node_b = init::zeros<T>({node_dim});
  p.completion = init::normal<T>({max_slices, node_dim}, 0.5, rng);
  p.gat = GatParams<T>::init(node_dim, gat_dim, gat_layers, rng);
  p.fusion_w = init::zeros<T>({gat_dim, channels});
  p.fusion_b = init::zeros<T>({channels});
  return p;
}

void VsgcOptions::validate() const {
  if (k_nn == 0) throw ConfigError("k_nn must be positive");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(ppr_alpha > 0.0 && ppr_alpha <= 1.0)) throw ConfigError("ppr_alpha must lie in (0, 1]");
}

template <typename T>
Tensor<T> tokens_to_nodes(const Tensor<T>& tokens, const TokenGrid& grid, std::size_t n_nodes, const Tensor<T>& w,
                          const Tensor<T>& b) {
  if (n_nodes == 0) throw DegenerateInputError("tokens_to_nodes: no non-pad slices");
  if (tokens.ndim() != 2 || tokens.dim(0) != grid.tokens() || n_nodes > grid.depth) {
    throw ShapeError("tokens_to_nodes: tokens " + to_string(tokens.shape()) + " do not match grid");
  }
  const std::size_t c = tokens.dim(1);
  auto pooled = ops::mean_axis(ops::reshape(tokens, {grid.depth, grid.tokens_per_slice(), c}), 1);
  if (n_nodes < grid.depth) pooled = ops::slice(pooled, 0, 0, n_nodes);
  return ops::linear(pooled, w, b);
}

template <typename T>
VsgcResult<T> vsgc_apply(const Tensor<T>& tokens, const TokenGrid& grid, std::span<const std::uint8_t> missing,
                         const VsgcParams<T>& params, const VsgcOptions& opts) {
  opts.validate();
  const std::size_t n = missing.size();
  if (n < 2) throw ContractError("vsgc_apply: needs at least 2 non-pad slices, got " + std::to_string(n));
  VsgcResult<T> res;
  auto nodes = tokens_to_nodes(tokens, grid, n, params.node_w, params.node_b);
  for (T x : nodes.data()) {
    if (!std::isfinite(static_cast<double>(x))) throw NumericError("vsgc_apply: non-finite node features");
  }

  auto& g = res.graph;
  g.x = nodes;
  g.missing.assign(missing.begin(), missing.end());
  g.adj = knn_graph(nodes.detach(), std::min(opts.k_nn, n - 1), opts.metric);
  g.incomplete = incomplete_edges(to_double(g.adj.data()), missing);

  auto& v = res.views;
  v.adj_a = g.adj;
  v.x_a = opts.attribute_view ? attribute_view(nodes, missing, params.completion) : nodes;
  if (opts.structure_view) {
    auto sv = structure_view(nodes, g.adj, missing, opts.ppr_alpha);
    v.x_s = sv.x;
    v.adj_s = sv.adj;
  } else {
    const auto keep = available_rows(missing);
    v.x_s = ops::row_select<T>(keep, nodes, Tensor<T>::zeros(nodes.shape()));
    v.adj_s = g.adj;
  }
  auto ga = gat_forward(v.x_a, v.adj_a, params.gat);
  auto gs = gat_forward(v.x_s, v.adj_s, params.gat);
  v.kink_margin = std::min(kink_margin(ga, v.adj_a), kink_margin(gs, v.adj_s));
  v.z_a = ga.z;
  v.z_s = gs.z;
  v.attention_a = std::move(ga.attention);
  v.attention_s = std::move(gs.attention);
  res.loss = contrastive_loss(v.z_a, v.z_s, opts.tau);

  const std::size_t c = tokens.dim(1);
  auto correction = ops::linear(ops::add(v.z_a, v.z_s), params.fusion_w, params.fusion_b);
  if (n < grid.depth) correction = ops::concat<T>({correction, Tensor<T>::zeros({grid.depth - n, c})}, 0);
  auto per_slice = ops::reshape(correction, {grid.depth, 1, c});
  auto grouped = ops::reshape(tokens, {grid.depth, grid.tokens_per_slice(), c});
  res.tokens = ops::reshape(ops::add(grouped, per_slice), {grid.tokens(), c});
  return res;
}

#define SAGC_INSTANTIATE(T)                                                                                    \
  template Tensor<T> knn_graph(const Tensor<T>&, std::size_t, KnnMetric);                                     \
  template Tensor<T> attribute_view(const Tensor<T>&, std::span<const std::uint8_t>, const Tensor<T>&);       \
  template StructureView<T> structure_view(const Tensor<T>&, const Tensor<T>&, std::span<const std::uint8_t>, \
                                           double);                                                           \
  template struct GatParams<T>;                                                                               \
  template GatOutput<T> gat_forward(const Tensor<T>&, const Tensor<T>&, const GatParams<T>&);                 \
  template double kink_margin(const GatOutput<T>&, const Tensor<T>&);                                         \
  template Tensor<T> contrastive_loss(const Tensor<T>&, const Tensor<T>&, double);                            \
  template struct VsgcParams<T>;                                                                              \
  template Tensor<T> tokens_to_nodes(const Tensor<T>&, const TokenGrid&, std::size_t, const Tensor<T>&,       \
                                     const Tensor<T>&);                                                       \
  template VsgcResult<T> vsgc_apply(const Tensor<T>&, const TokenGrid&, std::span<const std::uint8_t>,        \
                                    const VsgcParams<T>&, const VsgcOptions&);

SAGC_INSTANTIATE(float)
SAGC_INSTANTIATE(double)
SAGC_INSTANTIATE(long double)

}  // namespace sagc
