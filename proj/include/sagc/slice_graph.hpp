// SPDX-License-Identifier: Apache-2.0
//
// Slice-level graph completion. Each non-pad slice becomes a node whose
// attributes are its pooled tokens. Two views of the incomplete graph are
// built: an attribute view that fills missing nodes from learnable rows, and
// a structure view that diffuses features with personalized PageRank. Both
// are encoded by one shared two-layer GAT, aligned with a cross-view
// contrastive loss, and their sum is added back to the slice's tokens.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sagc/spatial_adapter.hpp"
#include "sagc/tensor.hpp"

namespace sagc {

enum class KnnMetric { cosine, euclidean };

/// Symmetric 0/1 adjacency [n, n] with zero diagonal: every node is joined
/// to its k nearest neighbours (ties go to the lower index), then edges are
/// kept if either endpoint chose them. Zero feature rows count as cosine
/// distance 1 to everything. ConfigError if k == 0 or k >= n.
template <typename T>
Tensor<T> knn_graph(const Tensor<T>& x, std::size_t k, KnnMetric metric = KnnMetric::cosine);

/// Edge flags [n*n]: 1 where an edge touches a missing node.
std::vector<std::uint8_t> incomplete_edges(std::span<const double> adj, std::span<const std::uint8_t> missing);

template <typename T>
struct SliceGraph {
  Tensor<T> x;                         // [n, d]
  Tensor<T> adj;                       // [n, n], 0/1
  std::vector<std::uint8_t> missing;   // [n]
  std::vector<std::uint8_t> incomplete;  // [n*n]
  std::size_t size() const { return missing.size(); }
};

/// Missing rows of x replaced by the first n rows of `completion` [n_max, d].
template <typename T>
Tensor<T> attribute_view(const Tensor<T>& x, std::span<const std::uint8_t> missing, const Tensor<T>& completion);

/// alpha (I - (1 - alpha) D^-1 (A + I))^-1 for a dense adjacency, row-major.
/// Rows sum to one. ConfigError unless alpha in (0, 1].
std::vector<double> ppr_matrix(std::span<const double> adj, std::size_t n, double alpha);

template <typename T>
struct StructureView {
  Tensor<T> x;    // diffusion of x with missing rows zeroed
  Tensor<T> adj;  // the PPR matrix, constant
};

template <typename T>
StructureView<T> structure_view(const Tensor<T>& x, const Tensor<T>& adj, std::span<const std::uint8_t> missing,
                                double alpha);

template <typename T>
struct GatLayer {
  Tensor<T> w;      // [in, out]
  Tensor<T> a_src;  // [out, 1]
  Tensor<T> a_dst;  // [out, 1]
};

template <typename T>
struct GatParams {
  std::vector<GatLayer<T>> layers;

  static GatParams init(std::size_t in_dim, std::size_t out_dim, std::size_t n_layers, Rng& rng);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string p = prefix + "layer" + std::to_string(i) + ".";
      f(p + "w", layers[i].w);
      f(p + "a_src", layers[i].a_src);
      f(p + "a_dst", layers[i].a_dst);
    }
  }
};

template <typename T>
struct GatOutput {
  Tensor<T> z;                       // [n, out]
  std::vector<Tensor<T>> attention;  // one [n, n] matrix per layer
  std::vector<Tensor<T>> logits;     // pre-activation scores per layer
};

/// Smallest |score| over the neighbourhood entries of every layer: the
/// distance to the LeakyReLU kink, where the layer is not differentiable.
template <typename T>
double kink_margin(const GatOutput<T>& out, const Tensor<T>& adj);

/// Neighbourhoods are the positive entries of adj plus self-loops; a zero
/// diagonal entry is treated as weight 1. Real-valued entries scale the
/// softmax terms. ELU between layers, none after the last.
template <typename T>
GatOutput<T> gat_forward(const Tensor<T>& x, const Tensor<T>& adj, const GatParams<T>& params);

/// Symmetric cross-view InfoNCE with cosine similarity over temperature,
/// denominators excluding the positive pair. Returns shape [1].
/// ContractError if n < 2 or tau <= 0; DegenerateInputError on a zero row.
template <typename T>
Tensor<T> contrastive_loss(const Tensor<T>& z_a, const Tensor<T>& z_s, double tau);

template <typename T>
struct VsgcParams {
  Tensor<T> node_w;      // [C, d]
  Tensor<T> node_b;      // [d]
  Tensor<T> completion;  // [n_max, d]
  GatParams<T> gat;
  Tensor<T> fusion_w;    // [d', C], zero at init
  Tensor<T> fusion_b;    // [C], zero at init

  static VsgcParams init(std::size_t channels, std::size_t node_dim, std::size_t gat_dim, std::size_t gat_layers,
                         std::size_t max_slices, Rng& rng);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "node_w", node_w);
    f(prefix + "node_b", node_b);
    f(prefix + "completion", completion);
    gat.visit(prefix + "gat.", f);
    f(prefix + "fusion_w", fusion_w);
    f(prefix + "fusion_b", fusion_b);
  }
};

struct VsgcOptions {
  std::size_t k_nn = 3;
  double tau = 0.8;
  double ppr_alpha = 0.15;
  KnnMetric metric = KnnMetric::cosine;
  /// Off: the attribute view keeps the raw pooled features of missing nodes.
  bool attribute_view = true;
  /// Off: the structure view is the kNN graph with missing rows zeroed.
  bool structure_view = true;

  void validate() const;
};

/// Mean of each slice's tokens followed by the node adapter. Nodes are the
/// first n_nodes slices of the grid. DegenerateInputError if n_nodes == 0.
template <typename T>
Tensor<T> tokens_to_nodes(const Tensor<T>& tokens, const TokenGrid& grid, std::size_t n_nodes, const Tensor<T>& w,
                          const Tensor<T>& b);

template <typename T>
struct ViewPair {
  Tensor<T> x_a, adj_a;
  Tensor<T> x_s, adj_s;
  Tensor<T> z_a, z_s;
  std::vector<Tensor<T>> attention_a, attention_s;
  /// Distance of the nearest GAT score to the LeakyReLU kink over both views.
  double kink_margin = 0;
};

template <typename T>
struct VsgcResult {
  Tensor<T> tokens;  // [tokens, C]
  Tensor<T> loss;    // [1]
  SliceGraph<T> graph;
  ViewPair<T> views;
};

/// `missing` has one flag per non-pad slice; pad slices follow them at the
/// end of the grid and receive no correction. k is capped at n - 1 so tiny
/// graphs still run. NumericError if the node features are not finite.
template <typename T>
VsgcResult<T> vsgc_apply(const Tensor<T>& tokens, const TokenGrid& grid, std::span<const std::uint8_t> missing,
                         const VsgcParams<T>& params, const VsgcOptions& opts);

}  // namespace sagc
