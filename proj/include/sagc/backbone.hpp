// SPDX-License-Identifier: Apache-2.0
//
// Transformer encoder over slice patches with adapters around each
// attention block, slice-graph completion at selected depths, and a
// convolutional decoder that fuses intermediate token maps back to full
// in-plane resolution.
//
// Tokens are ordered (slice, patch row, patch column). The patch depth is
// one, so each slice owns a contiguous run of Hp*Wp token rows.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sagc/config.hpp"
#include "sagc/slice_graph.hpp"
#include "sagc/spatial_adapter.hpp"
#include "sagc/volume.hpp"

namespace sagc {

struct Ablation {
  bool no_vsa = false;
  bool no_vsgc = false;
  bool no_attribute_view = false;
  bool no_structure_view = false;
  bool no_cl = false;

  /// "full", "no_vsa", "no_vsgc", "no_attribute_view", "no_structure_view"
  /// or "no_cl"; ConfigError otherwise.
  static Ablation named(const std::string& name);
  std::string name() const;
  static const std::vector<std::string>& variant_names();
  bool operator==(const Ablation&) const = default;
};

struct BackboneConfig {
  std::size_t n_blocks = 12;
  std::size_t embed_dim = 32;
  std::size_t n_heads = 4;
  std::size_t mlp_ratio = 4;
  std::size_t patch = 8;  // in-plane patch edge; depth extent is always 1
  /// Shallow to deep; the deepest feeds the bottleneck, the others the
  /// decoder stages from coarse to fine.
  std::vector<std::size_t> skip_taps = {3, 6, 9, 12};
  std::vector<std::size_t> vsgc_taps = {3, 6, 12};
  std::size_t vsa_reduction = 4;
  std::size_t node_dim = 64;
  std::size_t gat_dim = 64;
  std::size_t gat_layers = 2;
  std::size_t k_nn = 3;
  double tau = 0.8;
  double ppr_alpha = 0.15;
  std::size_t max_slices = 24;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t decoder_channels = 16;
  std::size_t stem_channels = 8;
  Ablation ablation;

  static constexpr std::size_t kInputChannels = 2;

  /// ConfigError on any inconsistent field.
  void validate() const;
  TokenGrid grid(std::size_t depth) const { return {depth, height / patch, width / patch}; }
  VsgcOptions vsgc_options() const;

  /// Applies one entry; returns false if the key is not a model key.
  bool apply(const ConfigEntry& e);
  /// key = value lines that `apply` reads back to an equal config.
  std::string to_text() const;
  bool operator==(const BackboneConfig&) const = default;
};

template <typename T>
struct BlockParams {
  VsaParams<T> vsa_pre, vsa_post;
  Tensor<T> norm1_gamma, norm1_beta;
  Tensor<T> qkv_w, qkv_b;    // [C, 3C], [3C]
  Tensor<T> proj_w, proj_b;  // [C, C], [C]
  Tensor<T> norm2_gamma, norm2_beta;
  Tensor<T> mlp_w1, mlp_b1;  // [C, mC], [mC]
  Tensor<T> mlp_w2, mlp_b2;  // [mC, C], [C]

  static BlockParams init(const BackboneConfig& cfg, Rng& rng);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    vsa_pre.visit(prefix + "vsa_pre.", f);
    f(prefix + "norm1_gamma", norm1_gamma);
    f(prefix + "norm1_beta", norm1_beta);
    f(prefix + "qkv_w", qkv_w);
    f(prefix + "qkv_b", qkv_b);
    f(prefix + "proj_w", proj_w);
    f(prefix + "proj_b", proj_b);
    vsa_post.visit(prefix + "vsa_post.", f);
    f(prefix + "norm2_gamma", norm2_gamma);
    f(prefix + "norm2_beta", norm2_beta);
    f(prefix + "mlp_w1", mlp_w1);
    f(prefix + "mlp_b1", mlp_b1);
    f(prefix + "mlp_w2", mlp_w2);
    f(prefix + "mlp_b2", mlp_b2);
  }
};

/// Per-slice 2D decoder on the token map [D, C, Hp, Wp]. Three stages each
/// double the in-plane size and fuse one encoder tap (projected by a 1x1 conv
/// and upsampled to match); the last stage also fuses a stem, a 3x3x3
/// convolution over the raw input channels.
template <typename T>
struct DecoderParams {
  Tensor<T> bottleneck_w, bottleneck_b;  // 3x3, deepest tap -> decoder width
  std::vector<Tensor<T>> skip_w, skip_b;  // 1x1, one per stage
  std::vector<Tensor<T>> fuse_w, fuse_b;  // 3x3, one per stage
  Tensor<T> stem_w, stem_b;              // [sc, 3*2, 3, 3]: slices d-1, d, d+1
  Tensor<T> head_w, head_b;              // 1x1 -> one channel

  static constexpr std::size_t kStages = 3;

  static DecoderParams init(const BackboneConfig& cfg, Rng& rng);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "bottleneck_w", bottleneck_w);
    f(prefix + "bottleneck_b", bottleneck_b);
    for (std::size_t i = 0; i < skip_w.size(); ++i) {
      const std::string s = prefix + "stage" + std::to_string(i) + ".";
      f(s + "skip_w", skip_w[i]);
      f(s + "skip_b", skip_b[i]);
      f(s + "fuse_w", fuse_w[i]);
      f(s + "fuse_b", fuse_b[i]);
    }
    f(prefix + "stem_w", stem_w);
    f(prefix + "stem_b", stem_b);
    f(prefix + "head_w", head_w);
    f(prefix + "head_b", head_b);
  }
};

template <typename T>
struct ModelParams {
  Tensor<T> patch_w, patch_b;  // [2*p*p, C], [C]
  Tensor<T> pos;               // [max_slices*Hp*Wp, C]
  std::vector<BlockParams<T>> blocks;
  std::vector<VsgcParams<T>> vsgc;  // one per graph tap
  DecoderParams<T> decoder;

  /// Every tensor is created in a fixed order whatever the ablation, so
  /// variants built from one seed start from identical weights.
  static ModelParams init(const BackboneConfig& cfg, std::uint64_t seed);
  /// Correctly shaped parameters for cfg whose values are to be overwritten.
  static ModelParams skeleton(const BackboneConfig& cfg) { return init(cfg, 0); }

  /// f(name, Tensor<T>&) over every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    f(std::string("patch_w"), patch_w);
    f(std::string("patch_b"), patch_b);
    f(std::string("pos"), pos);
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].visit("block" + std::to_string(i) + ".", f);
    for (std::size_t i = 0; i < vsgc.size(); ++i) vsgc[i].visit("vsgc" + std::to_string(i) + ".", f);
    decoder.visit("decoder.", f);
  }

  std::vector<Tensor<T>> tensors() const;
  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  /// Same values at another precision.
  template <typename U>
  ModelParams<U> cast(const BackboneConfig& cfg) const {
    auto out = ModelParams<U>::skeleton(cfg);
    const auto src = tensors();
    std::size_t i = 0;
    out.visit([&](const std::string&, Tensor<U>& t) { t = src[i++].template cast<U>(); });
    return out;
  }

  /// Fresh gradient-tracking leaves that share this model's storage.
  ModelParams bind() const;
  /// Deep copy.
  ModelParams clone() const;
};

/// Two channels per slice: intensity with missing and pad slices zeroed, and
/// the availability mask. Shape [D, 2, H, W].
template <typename T>
Tensor<T> build_input_channels(const Volume& v);

template <typename T>
struct Embedded {
  Tensor<T> tokens;  // [D*Hp*Wp, C]
  TokenGrid grid;
};

/// Per-patch linear projection plus learned position embedding.
template <typename T>
Embedded<T> patch_embed(const Tensor<T>& channels, const ModelParams<T>& p, const BackboneConfig& cfg);

/// x -> adapter -> x + attn(norm(x)) -> adapter -> x + mlp(norm(x)).
/// Attention maps (one [tokens, tokens] per head) go to `attention` if given.
template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const BlockParams<T>& p, const TokenGrid& grid,
                            const BackboneConfig& cfg, std::vector<Tensor<T>>* attention = nullptr);

template <typename T>
struct ForwardResult {
  Tensor<T> output;                  // [D, H, W] in [-1, 1]
  std::vector<Tensor<T>> cl_losses;  // one [1] per active graph tap
  std::vector<VsgcResult<T>> graph_taps;
};

/// ConfigError if the volume geometry does not match cfg or pad slices are
/// not a trailing run; ContractError if fewer than 2 non-pad slices reach a
/// graph tap.
template <typename T>
ForwardResult<T> model_forward(const BackboneConfig& cfg, const ModelParams<T>& p, const Volume& input);

/// Checkpoint: "SGCK", u32 version, u32 length + config text, u32 tensor
/// count, then per tensor: u32 name length, name, u32 rank, u32 dims, f32
/// values. Little-endian.
void save_checkpoint(const std::string& path, const BackboneConfig& cfg, const ModelParams<float>& p);
std::vector<std::uint8_t> encode_checkpoint(const BackboneConfig& cfg, const ModelParams<float>& p);

struct Checkpoint {
  BackboneConfig config;
  ModelParams<float> params;
};

/// FormatError on bad magic, version, truncation, or tensor names and shapes
/// that do not match the stored config.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sagc
