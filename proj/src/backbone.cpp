// SPDX-License-Identifier: Apache-2.0
#include "sagc/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "sagc/errors.hpp"
#include "sagc/init.hpp"
#include "sagc/ops.hpp"

namespace sagc {

// ---------------------------------------------------------------- ablation

const std::vector<std::string>& Ablation::variant_names() {
  static const std::vector<std::string> names = {"full",          "no_vsa",           "no_vsgc",
                                                 "no_attribute_view", "no_structure_view", "no_cl"};
  return names;
}

Ablation Ablation::named(const std::string& name) {
  Ablation a;
  if (name == "full") return a;
  if (name == "no_vsa") a.no_vsa = true;
  else if (name == "no_vsgc") a.no_vsgc = true;
  else if (name == "no_attribute_view") a.no_attribute_view = true;
  else if (name == "no_structure_view") a.no_structure_view = true;
  else if (name == "no_cl") a.no_cl = true;
  else throw ConfigError("unknown ablation variant '" + name + "'");
  return a;
}

std::string Ablation::name() const {
  const int n = int(no_vsa) + int(no_vsgc) + int(no_attribute_view) + int(no_structure_view) + int(no_cl);
  if (n == 0) return "full";
  if (n > 1) return "custom";
  if (no_vsa) return "no_vsa";
  if (no_vsgc) return "no_vsgc";
  if (no_attribute_view) return "no_attribute_view";
  if (no_structure_view) return "no_structure_view";
  return "no_cl";
}

// ------------------------------------------------------------------ config

void BackboneConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("backbone: " + m); };
  if (n_blocks == 0) fail("n_blocks must be positive");
  if (embed_dim == 0 || n_heads == 0 || embed_dim % n_heads != 0) {
    fail("embed_dim " + std::to_string(embed_dim) + " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (vsa_reduction == 0 || embed_dim % vsa_reduction != 0) {
    fail("embed_dim " + std::to_string(embed_dim) + " not divisible by vsa_reduction " + std::to_string(vsa_reduction));
  }
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (patch != (std::size_t{1} << DecoderParams<float>::kStages)) {
    fail("patch must be " + std::to_string(std::size_t{1} << DecoderParams<float>::kStages) +
         " (one decoder stage per in-plane doubling)");
  }
  if (height == 0 || width == 0 || height % patch != 0 || width % patch != 0) {
    fail("in-plane size " + std::to_string(height) + "x" + std::to_string(width) + " not divisible by patch " +
         std::to_string(patch));
  }
  if (skip_taps.size() != DecoderParams<float>::kStages + 1) {
    fail("skip_taps needs " + std::to_string(DecoderParams<float>::kStages + 1) + " entries");
  }
  for (std::size_t i = 0; i < skip_taps.size(); ++i) {
    if (skip_taps[i] < 1 || skip_taps[i] > n_blocks) fail("skip tap outside 1..n_blocks");
    if (i > 0 && skip_taps[i] < skip_taps[i - 1]) fail("skip_taps must be non-decreasing");
  }
  for (std::size_t i = 0; i < vsgc_taps.size(); ++i) {
    if (vsgc_taps[i] < 1 || vsgc_taps[i] > n_blocks) fail("vsgc tap outside 1..n_blocks");
    if (i > 0 && vsgc_taps[i] <= vsgc_taps[i - 1]) fail("vsgc_taps must be strictly increasing");
  }
  if (node_dim == 0 || gat_dim == 0 || gat_layers == 0) fail("graph widths and depth must be positive");
  if (max_slices < 2) fail("max_slices must be at least 2");
  if (decoder_channels == 0 || stem_channels == 0) fail("decoder widths must be positive");
  vsgc_options().validate();
}

VsgcOptions BackboneConfig::vsgc_options() const {
  VsgcOptions o;
  o.k_nn = k_nn;
  o.tau = tau;
  o.ppr_alpha = ppr_alpha;
  o.metric = KnnMetric::cosine;
  o.attribute_view = !ablation.no_attribute_view;
  o.structure_view = !ablation.no_structure_view;
  return o;
}

bool BackboneConfig::apply(const ConfigEntry& e) {
  const std::string& k = e.key;
  if (k == "n_blocks") n_blocks = config_size(e);
  else if (k == "embed_dim") embed_dim = config_size(e);
  else if (k == "n_heads") n_heads = config_size(e);
  else if (k == "mlp_ratio") mlp_ratio = config_size(e);
  else if (k == "patch") patch = config_size(e);
  else if (k == "skip_taps") skip_taps = config_size_list(e);
  else if (k == "vsgc_taps") vsgc_taps = config_size_list(e);
  else if (k == "vsa_reduction") vsa_reduction = config_size(e);
  else if (k == "node_dim") node_dim = config_size(e);
  else if (k == "gat_dim") gat_dim = config_size(e);
  else if (k == "gat_layers") gat_layers = config_size(e);
  else if (k == "k_nn") k_nn = config_size(e);
  else if (k == "tau") tau = config_real(e);
  else if (k == "ppr_alpha") ppr_alpha = config_real(e);
  else if (k == "max_slices") max_slices = config_size(e);
  else if (k == "height") height = config_size(e);
  else if (k == "width") width = config_size(e);
  else if (k == "decoder_channels") decoder_channels = config_size(e);
  else if (k == "stem_channels") stem_channels = config_size(e);
  else if (k == "ablation") {
    try {
      ablation = Ablation::named(e.value);
    } catch (const ConfigError& err) {
      config_fail(e, err.what());
    }
  } else {
    return false;
  }
  return true;
}

std::string BackboneConfig::to_text() const {
  std::string s;
  auto line = [&](const char* k, const std::string& v) { s += std::string(k) + " = " + v + "\n"; };
  line("n_blocks", std::to_string(n_blocks));
  line("embed_dim", std::to_string(embed_dim));
  line("n_heads", std::to_string(n_heads));
  line("mlp_ratio", std::to_string(mlp_ratio));
  line("patch", std::to_string(patch));
  line("skip_taps", format_size_list(skip_taps));
  line("vsgc_taps", format_size_list(vsgc_taps));
  line("vsa_reduction", std::to_string(vsa_reduction));
  line("node_dim", std::to_string(node_dim));
  line("gat_dim", std::to_string(gat_dim));
  line("gat_layers", std::to_string(gat_layers));
  line("k_nn", std::to_string(k_nn));
  line("tau", format_real(tau));
  line("ppr_alpha", format_real(ppr_alpha));
  line("max_slices", std::to_string(max_slices));
  line("height", std::to_string(height));
  line("width", std::to_string(width));
  line("decoder_channels", std::to_string(decoder_channels));
  line("stem_channels", std::to_string(stem_channels));
  line("ablation", ablation.name());
  return s;
}

// -------------------------------------------------------------- parameters

template <typename T>
BlockParams<T> BlockParams<T>::init(const BackboneConfig& cfg, Rng& rng) {
  const std::size_t c = cfg.embed_dim, hidden = cfg.mlp_ratio * c;
  BlockParams p;
  p.vsa_pre = VsaParams<T>::init(c, cfg.vsa_reduction, rng);
  p.norm1_gamma = init::ones<T>({c});
  p.norm1_beta = init::zeros<T>({c});
  p.qkv_w = init::xavier<T>(c, 3 * c, rng);
  p.qkv_b = init::zeros<T>({3 * c});
  // Residual branches start small so the stack begins near identity.
  const double branch = 1.0 / std::sqrt(2.0 * static_cast<double>(cfg.n_blocks));
  p.proj_w = init::normal<T>({c, c}, branch * std::sqrt(1.0 / static_cast<double>(c)), rng);
  p.proj_b = init::zeros<T>({c});
  p.vsa_post = VsaParams<T>::init(c, cfg.vsa_reduction, rng);
  p.norm2_gamma = init::ones<T>({c});
  p.norm2_beta = init::zeros<T>({c});
  p.mlp_w1 = init::xavier<T>(c, hidden, rng);
  p.mlp_b1 = init::zeros<T>({hidden});
  p.mlp_w2 = init::normal<T>({hidden, c}, branch * std::sqrt(1.0 / static_cast<double>(hidden)), rng);
  p.mlp_b2 = init::zeros<T>({c});
  return p;
}

template <typename T>
DecoderParams<T> DecoderParams<T>::init(const BackboneConfig& cfg, Rng& rng) {
  const std::size_t c = cfg.embed_dim, dc = cfg.decoder_channels, sc = cfg.stem_channels;
  DecoderParams p;
  p.bottleneck_w = init::conv_he<T>(dc, c, 3, 3, rng);
  p.bottleneck_b = init::zeros<T>({dc});
  for (std::size_t s = 0; s < kStages; ++s) {
    p.skip_w.push_back(init::conv_he<T>(dc, c, 1, 1, rng));
    p.skip_b.push_back(init::zeros<T>({dc}));
    const std::size_t in = 2 * dc + (s + 1 == kStages ? sc : 0);
    p.fuse_w.push_back(init::conv_he<T>(dc, in, 3, 3, rng));
    p.fuse_b.push_back(init::zeros<T>({dc}));
  }
  p.stem_w = init::conv_he<T>(sc, 3 * BackboneConfig::kInputChannels, 3, 3, rng);
  p.stem_b = init::zeros<T>({sc});
  p.head_w = init::normal<T>({1, dc, 1, 1}, std::sqrt(1.0 / static_cast<double>(dc)), rng);
  p.head_b = init::zeros<T>({1});
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::init(const BackboneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t c = cfg.embed_dim, p2 = cfg.patch * cfg.patch;
  const std::size_t tokens = cfg.max_slices * cfg.grid(1).tokens();
  ModelParams m;
  m.patch_w = init::xavier<T>(BackboneConfig::kInputChannels * p2, c, rng);
  m.patch_b = init::zeros<T>({c});
  m.pos = init::normal<T>({tokens, c}, 0.02, rng);
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) m.blocks.push_back(BlockParams<T>::init(cfg, rng));
  for (std::size_t i = 0; i < cfg.vsgc_taps.size(); ++i) {
    m.vsgc.push_back(
        VsgcParams<T>::init(c, cfg.node_dim, cfg.gat_dim, cfg.gat_layers, cfg.max_slices, rng));
  }
  m.decoder = DecoderParams<T>::init(cfg, rng);
  return m;
}

template <typename T>
std::vector<Tensor<T>> ModelParams<T>::tensors() const {
  std::vector<Tensor<T>> out;
  const_cast<ModelParams*>(this)->visit([&](const std::string&, Tensor<T>& t) { out.push_back(t); });
  return out;
}

template <typename T>
std::vector<std::string> ModelParams<T>::names() const {
  std::vector<std::string> out;
  const_cast<ModelParams*>(this)->visit([&](const std::string& n, Tensor<T>&) { out.push_back(n); });
  return out;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.numel();
  return n;
}

template <typename T>
ModelParams<T> ModelParams<T>::bind() const {
  ModelParams out = *this;
  out.visit([](const std::string&, Tensor<T>& t) { t = t.alias_leaf(true); });
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::clone() const {
  ModelParams out = *this;
  out.visit([](const std::string&, Tensor<T>& t) { t = t.clone(false); });
  return out;
}

// ------------------------------------------------------------------ encoder

template <typename T>
Tensor<T> build_input_channels(const Volume& v) {
  v.validate();
  const std::size_t plane = v.slice_size();
  std::vector<T> out(v.depth * BackboneConfig::kInputChannels * plane, T(0));
  for (std::size_t d = 0; d < v.depth; ++d) {
    if (!v.slice_mask[d] || v.pad_mask[d]) continue;
    T* dst = out.data() + d * BackboneConfig::kInputChannels * plane;
    const auto src = v.slice(d);
    for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<T>(src[i]);
    std::fill_n(dst + plane, plane, T(1));
  }
  return Tensor<T>({v.depth, BackboneConfig::kInputChannels, v.height, v.width}, std::move(out));
}

template <typename T>
Embedded<T> patch_embed(const Tensor<T>& channels, const ModelParams<T>& p, const BackboneConfig& cfg) {
  if (channels.ndim() != 4 || channels.dim(1) != BackboneConfig::kInputChannels) {
    throw ShapeError("patch_embed: expected [D, 2, H, W], got " + to_string(channels.shape()));
  }
  const std::size_t d = channels.dim(0), h = channels.dim(2), w = channels.dim(3), ps = cfg.patch;
  if (ps == 0 || h % ps != 0 || w % ps != 0) {
    throw ConfigError("patch_embed: in-plane size " + std::to_string(h) + "x" + std::to_string(w) +
                      " not divisible by patch " + std::to_string(ps));
  }
  const TokenGrid grid{d, h / ps, w / ps};
  if (grid.tokens() > p.pos.dim(0)) {
    throw ConfigError("patch_embed: " + std::to_string(grid.tokens()) + " tokens exceed the " +
                      std::to_string(p.pos.dim(0)) + " position embeddings");
  }
  const std::size_t c_in = BackboneConfig::kInputChannels;
  auto patches = ops::reshape(channels, {d, c_in, grid.height, ps, grid.width, ps});
  patches = ops::permute(patches, {0, 2, 4, 1, 3, 5});
  patches = ops::reshape(patches, {grid.tokens(), c_in * ps * ps});
  auto tokens = ops::add(ops::linear(patches, p.patch_w, p.patch_b), ops::slice(p.pos, 0, 0, grid.tokens()));
  return {tokens, grid};
}

template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const BlockParams<T>& p, const TokenGrid& grid,
                            const BackboneConfig& cfg, std::vector<Tensor<T>>* attention) {
  const std::size_t c = p.qkv_w.dim(0);
  if (x.ndim() != 2 || x.dim(1) != c || x.dim(0) != grid.tokens()) {
    throw ShapeError("transformer_block: tokens " + to_string(x.shape()) + " do not match grid of " +
                     std::to_string(grid.tokens()) + " tokens with " + std::to_string(c) + " channels");
  }
  const std::size_t heads = cfg.n_heads, dh = c / heads;
  const T eps = static_cast<T>(kLayerNormEps);
  const bool adapters = !cfg.ablation.no_vsa;

  Tensor<T> h = adapters ? vsa_forward(x, grid, p.vsa_pre) : x;
  auto qkv = ops::linear(ops::layer_norm(h, p.norm1_gamma, p.norm1_beta, eps), p.qkv_w, p.qkv_b);
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<Tensor<T>> outs;
  for (std::size_t i = 0; i < heads; ++i) {
    auto q = ops::slice(qkv, 1, i * dh, dh);
    auto k = ops::slice(qkv, 1, c + i * dh, dh);
    auto v = ops::slice(qkv, 1, 2 * c + i * dh, dh);
    auto a = ops::softmax(ops::scale(ops::matmul(q, ops::transpose(k)), scale), 1);
    if (attention) attention->push_back(a);
    outs.push_back(ops::matmul(a, v));
  }
  auto attn = heads == 1 ? outs[0] : ops::concat(outs, 1);
  h = ops::add(h, ops::linear(attn, p.proj_w, p.proj_b));

  if (adapters) h = vsa_forward(h, grid, p.vsa_post);
  auto mlp = ops::linear(ops::layer_norm(h, p.norm2_gamma, p.norm2_beta, eps), p.mlp_w1, p.mlp_b1);
  return ops::add(h, ops::linear(ops::gelu(mlp), p.mlp_w2, p.mlp_b2));
}

// ------------------------------------------------------------------ decoder

namespace {

template <typename T>
Tensor<T> tokens_to_maps(const Tensor<T>& tokens, const TokenGrid& grid) {
  const std::size_t c = tokens.dim(1);
  auto m = ops::reshape(tokens, {grid.depth, grid.height, grid.width, c});
  return ops::permute(m, {0, 3, 1, 2});
}

template <typename T>
Tensor<T> conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return ops::conv2d(x, w, b, 1, w.dim(2) / 2);
}

template <typename T>
Tensor<T> upsample(const Tensor<T>& x, std::size_t factor) {
  return factor == 1 ? x : ops::upsample_nearest2d(x, factor);
}

// Each slice's channels stacked with those of the slices before and after it
// (zero beyond the ends): [D, C, H, W] -> [D, 3C, H, W]. A 3x3 conv over the
// result is a 3x3x3 conv over the volume.
template <typename T>
Tensor<T> with_depth_neighbours(const Tensor<T>& x) {
  const std::size_t d = x.dim(0);
  if (d == 1) {
    auto z = Tensor<T>::zeros(x.shape());
    return ops::concat(std::vector<Tensor<T>>{z, x, z}, 1);
  }
  Shape one = x.shape();
  one[0] = 1;
  const auto z = Tensor<T>::zeros(one);
  auto prev = ops::concat(std::vector<Tensor<T>>{z, ops::slice(x, 0, 0, d - 1)}, 0);
  auto next = ops::concat(std::vector<Tensor<T>>{ops::slice(x, 0, 1, d - 1), z}, 0);
  return ops::concat(std::vector<Tensor<T>>{prev, x, next}, 1);
}

template <typename T>
Tensor<T> decode(const std::vector<Tensor<T>>& taps, const TokenGrid& grid, const Tensor<T>& channels,
                 const DecoderParams<T>& p) {
  constexpr std::size_t stages = DecoderParams<T>::kStages;
  auto x = ops::gelu(conv(tokens_to_maps(taps[stages], grid), p.bottleneck_w, p.bottleneck_b));
  for (std::size_t s = 0; s < stages; ++s) {
    x = upsample(x, 2);
    const std::size_t tap = stages - 1 - s;  // coarse stages take the deeper taps
    auto skip = ops::gelu(conv(tokens_to_maps(taps[tap], grid), p.skip_w[s], p.skip_b[s]));
    std::vector<Tensor<T>> parts{x, upsample(skip, std::size_t{2} << s)};
    if (s + 1 == stages) parts.push_back(ops::gelu(conv(with_depth_neighbours(channels), p.stem_w, p.stem_b)));
    x = ops::gelu(conv(ops::concat(parts, 1), p.fuse_w[s], p.fuse_b[s]));
  }
  return ops::tanh(conv(x, p.head_w, p.head_b));
}

void check_geometry(const BackboneConfig& cfg, const Volume& v) {
  v.validate();
  if (v.height != cfg.height || v.width != cfg.width) {
    throw ConfigError("model_forward: volume is " + std::to_string(v.height) + "x" + std::to_string(v.width) +
                      ", model expects " + std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
  if (v.depth > cfg.max_slices) {
    throw ConfigError("model_forward: " + std::to_string(v.depth) + " slices exceed max_slices " +
                      std::to_string(cfg.max_slices));
  }
  const std::size_t n = v.n_slices();
  for (std::size_t d = 0; d < v.depth; ++d) {
    if (bool(v.pad_mask[d]) != (d >= n)) {
      throw ConfigError("model_forward: pad slices must form a trailing run");
    }
  }
}

}  // namespace

template <typename T>
ForwardResult<T> model_forward(const BackboneConfig& cfg, const ModelParams<T>& p, const Volume& input) {
  check_geometry(cfg, input);
  const auto channels = build_input_channels<T>(input);
  auto [x, grid] = patch_embed(channels, p, cfg);

  std::vector<std::uint8_t> missing(input.n_slices());
  for (std::size_t i = 0; i < missing.size(); ++i) missing[i] = input.slice_mask[i] ? 0 : 1;
  const auto opts = cfg.vsgc_options();

  ForwardResult<T> out;
  std::vector<Tensor<T>> taps;
  std::size_t next_graph = 0;
  for (std::size_t b = 1; b <= cfg.n_blocks; ++b) {
    x = transformer_block(x, p.blocks[b - 1], grid, cfg);
    if (next_graph < cfg.vsgc_taps.size() && cfg.vsgc_taps[next_graph] == b) {
      if (!cfg.ablation.no_vsgc) {
        auto r = vsgc_apply(x, grid, missing, p.vsgc[next_graph], opts);
        x = r.tokens;
        out.cl_losses.push_back(r.loss);
        out.graph_taps.push_back(std::move(r));
      }
      ++next_graph;
    }
    for (std::size_t t : cfg.skip_taps) {
      if (t == b) taps.push_back(x);
    }
  }
  auto y = decode(taps, grid, channels, p.decoder);
  out.output = ops::reshape(y, {input.depth, input.height, input.width});
  return out;
}

// --------------------------------------------------------------- checkpoint

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

std::vector<std::uint8_t> encode_checkpoint(const BackboneConfig& cfg, const ModelParams<float>& p) {
  detail::ByteWriter w;
  w.magic("SGCK");
  w.u32(kCheckpointVersion);
  const std::string text = cfg.to_text();
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.text(text);
  const auto names = p.names();
  const auto tensors = p.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(names[i].size()));
    w.text(names[i]);
    w.u32(static_cast<std::uint32_t>(tensors[i].ndim()));
    for (auto d : tensors[i].shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : tensors[i].data()) w.f32(v);
  }
  return w.take();
}

void save_checkpoint(const std::string& path, const BackboneConfig& cfg, const ModelParams<float>& p) {
  detail::write_file(path, encode_checkpoint(cfg, p));
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("SGCK");
  const std::size_t version_at = r.offset();
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(v), version_at);
  }
  const std::size_t text_at = r.offset();
  const std::string text = r.text(r.u32());
  Checkpoint ck;
  try {
    for (const auto& e : parse_config_text(text)) {
      if (!ck.config.apply(e)) config_fail(e, "unknown model key");
    }
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad checkpoint config: ") + e.what(), text_at);
  }
  ck.params = ModelParams<float>::skeleton(ck.config);
  const std::size_t count_at = r.offset();
  const auto expected = ck.params.names();
  if (const auto n = r.u32(); n != expected.size()) {
    throw FormatError("checkpoint holds " + std::to_string(n) + " tensors, config implies " +
                          std::to_string(expected.size()),
                      count_at);
  }
  ck.params.visit([&](const std::string& name, Tensor<float>& t) {
    const std::size_t at = r.offset();
    const std::string got = r.text(r.u32());
    if (got != name) throw FormatError("expected tensor '" + name + "', found '" + got + "'", at);
    const std::size_t shape_at = r.offset();
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u32();
    if (shape != t.shape()) {
      throw FormatError("tensor '" + name + "' has shape " + to_string(shape) + ", expected " + to_string(t.shape()),
                        shape_at);
    }
    r.need(4 * t.numel(), "tensor payload");
    std::vector<float> values(t.numel());
    for (auto& v : values) v = r.f32();
    t = Tensor<float>(shape, std::move(values));
  });
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_file(path)); }

#define SAGC_INSTANTIATE(T)                                                                                  \
  template struct BlockParams<T>;                                                                            \
  template struct DecoderParams<T>;                                                                          \
  template struct ModelParams<T>;                                                                            \
  template Tensor<T> build_input_channels<T>(const Volume&);                                                 \
  template Embedded<T> patch_embed(const Tensor<T>&, const ModelParams<T>&, const BackboneConfig&);          \
  template Tensor<T> transformer_block(const Tensor<T>&, const BlockParams<T>&, const TokenGrid&,            \
                                       const BackboneConfig&, std::vector<Tensor<T>>*);                      \
  template ForwardResult<T> model_forward(const BackboneConfig&, const ModelParams<T>&, const Volume&);

SAGC_INSTANTIATE(float)
SAGC_INSTANTIATE(double)
SAGC_INSTANTIATE(long double)

#undef SAGC_INSTANTIATE

}  // namespace sagc
