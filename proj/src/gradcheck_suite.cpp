// SPDX-License-Identifier: Apache-2.0
#include "sagc/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "sagc/backbone.hpp"
#include "sagc/errors.hpp"
#include "sagc/gradcheck.hpp"
#include "sagc/ops.hpp"
#include "sagc/slice_graph.hpp"
#include "sagc/spatial_adapter.hpp"
#include "sagc/volume.hpp"

namespace sagc {
namespace {

using TD = Tensor<double>;
using Gen = std::mt19937_64;

constexpr double kEpsF64 = 1e-4;
constexpr double kEpsF32 = 1e-3;
// Configurations whose nearest kink is closer than this are redrawn.
constexpr double kKinkMargin = 1e-2;
constexpr std::size_t kMaxDrawsPerSeed = 10;

TD randn(Shape shape, Gen& g, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = nd(g);
  return TD(std::move(shape), std::move(v));
}

// Moves every entry at least `margin` away from zero, keeping its sign.
TD away_from_zero(TD t, double margin) {
  for (auto& x : t.mutable_data()) x = x < 0 ? x - margin : x + margin;
  return t;
}

// Scalar readout with fixed random weights so that no gradient vanishes by
// construction.
template <typename X>
Tensor<X> project(const Tensor<X>& y, std::uint64_t seed) {
  Gen g(seed);
  return ops::sum(ops::mul(y, randn(y.shape(), g).template cast<X>()));
}

template <typename X>
using In = std::vector<Tensor<X>>;

struct Checker {
  double f64 = 0;
  double f32 = 0;

  template <typename F>
  void operator()(F&& fn, const std::vector<TD>& inputs) {
    f64 = std::max(f64, grad_check_precise<double>(fn, inputs, kEpsF64));
    f32 = std::max(f32, grad_check_precise<float>(fn, inputs, kEpsF32));
  }
};

// Returns false when the drawn configuration lies too close to a kink.
using CaseFn = std::function<bool(Gen&, std::uint64_t, Checker&)>;

struct Case {
  std::string module;
  std::string name;
  CaseFn run;
};

template <typename F>
Case unary(std::string name, F op, double margin = 0.0, bool positive = false) {
  return {"primitives", std::move(name), [op, margin, positive](Gen& g, std::uint64_t s, Checker& chk) {
            TD x = randn({3, 4}, g);
            if (margin > 0) x = away_from_zero(x, margin);
            if (positive)
              for (auto& v : x.mutable_data()) v = std::abs(v) + 0.5;
            chk([&](const auto& in) { return project(op(in[0]), s); }, {x});
            return true;
          }};
}

std::vector<Case> primitive_cases() {
  std::vector<Case> c;
  auto binary = [&](std::string name, auto op) {
    c.push_back({"primitives", std::move(name), [op](Gen& g, std::uint64_t s, Checker& chk) {
                   chk([&](const auto& in) { return project(op(in[0], in[1]), s); }, {randn({3, 4}, g), randn({4}, g)});
                   return true;
                 }});
  };
  binary("add", [](const auto& a, const auto& b) { return ops::add(a, b); });
  binary("sub", [](const auto& a, const auto& b) { return ops::sub(a, b); });
  binary("mul", [](const auto& a, const auto& b) { return ops::mul(a, b); });

  c.push_back(unary("scale", [](const auto& x) {
    using X = typename std::decay_t<decltype(x)>::value_type;
    return ops::scale(x, X(-1.75));
  }));
  c.push_back(unary("add_scalar", [](const auto& x) {
    using X = typename std::decay_t<decltype(x)>::value_type;
    return ops::mul(ops::add_scalar(x, X(0.5)), x);
  }));
  c.push_back(unary("gelu", [](const auto& x) { return ops::gelu(x); }));
  c.push_back(unary("sigmoid", [](const auto& x) { return ops::sigmoid(x); }));
  c.push_back(unary("tanh", [](const auto& x) { return ops::tanh(x); }));
  c.push_back(unary("elu", [](const auto& x) { return ops::elu(x); }, 0.05));
  c.push_back(unary("leaky_relu", [](const auto& x) {
    using X = typename std::decay_t<decltype(x)>::value_type;
    return ops::mul(ops::leaky_relu(x, X(0.2)), x);
  }, 0.05));
  c.push_back(unary("exp", [](const auto& x) { return ops::exp(x); }));
  c.push_back(unary("log", [](const auto& x) { return ops::log(x); }, 0.0, true));
  c.push_back(unary("abs", [](const auto& x) { return ops::mul(ops::abs(x), x); }, 0.05));
  c.push_back(unary("sum", [](const auto& x) { return ops::mul(ops::sum(ops::mul(x, x)), ops::sum(x)); }));
  c.push_back(unary("mean", [](const auto& x) { return ops::mul(ops::mean(ops::mul(x, x)), ops::mean(x)); }));
  c.push_back(unary("abs_mean", [](const auto& x) { return ops::mul(ops::abs_mean(x), ops::sum(x)); }, 0.05));
  c.push_back(unary("mean_axis0", [](const auto& x) { return ops::mean_axis(ops::mul(x, x), 0); }));
  c.push_back(unary("mean_axis1", [](const auto& x) { return ops::mean_axis(ops::mul(x, x), 1); }));
  c.push_back(unary("l2_normalize_rows", [](const auto& x) { return ops::l2_normalize_rows(x); }));
  c.push_back(unary("transpose", [](const auto& x) { return ops::mul(ops::transpose(x), ops::transpose(x)); }));
  c.push_back(unary("reshape", [](const auto& x) { return ops::mul(ops::reshape(x, {2, 6}), ops::reshape(x, {2, 6})); }));
  c.push_back(unary("slice", [](const auto& x) { return ops::exp(ops::slice(x, 1, 1, 2)); }));
  c.push_back(unary("concat", [](const auto& x) { return ops::concat(In<typename std::decay_t<decltype(x)>::value_type>{ops::exp(x), x}, 1); }));
  c.push_back(unary("softmax_rows", [](const auto& x) { return ops::softmax(x, 1); }));
  c.push_back(unary("softmax_cols", [](const auto& x) { return ops::softmax(x, 0); }));
  c.push_back(unary("gather_rows", [](const auto& x) {
    const std::size_t rows[] = {2, 0, 2, 1};
    return ops::exp(ops::gather_rows(x, rows));
  }));

  c.push_back({"primitives", "cosine_sim", [](Gen& g, std::uint64_t, Checker& chk) {
                 chk([](const auto& in) { return ops::cosine_sim(in[0], in[1]); }, {randn({6}, g), randn({6}, g)});
                 return true;
               }});
  c.push_back({"primitives", "matmul", [](Gen& g, std::uint64_t s, Checker& chk) {
                 chk([&](const auto& in) { return project(ops::matmul(in[0], in[1]), s); },
                     {randn({3, 5}, g), randn({5, 4}, g)});
                 return true;
               }});
  c.push_back({"primitives", "linear", [](Gen& g, std::uint64_t s, Checker& chk) {
                 chk([&](const auto& in) { return project(ops::linear(in[0], in[1], in[2]), s); },
                     {randn({3, 5}, g), randn({5, 4}, g), randn({4}, g)});
                 return true;
               }});
  c.push_back({"primitives", "permute", [](Gen& g, std::uint64_t s, Checker& chk) {
                 chk([&](const auto& in) { return project(ops::exp(ops::permute(in[0], {2, 0, 1})), s); },
                     {randn({2, 3, 4}, g, 0.5)});
                 return true;
               }});
  c.push_back({"primitives", "row_select", [](Gen& g, std::uint64_t s, Checker& chk) {
                 const std::vector<std::uint8_t> take = {1, 0, 0, 1};
                 chk([&](const auto& in) { return project(ops::exp(ops::row_select(take, in[0], in[1])), s); },
                     {randn({4, 3}, g, 0.5), randn({4, 3}, g, 0.5)});
                 return true;
               }});
  c.push_back({"primitives", "diagonal", [](Gen& g, std::uint64_t s, Checker& chk) {
                 chk([&](const auto& in) { return project(ops::exp(ops::diagonal(in[0])), s); }, {randn({4, 4}, g)});
                 return true;
               }});
  c.push_back({"primitives", "weighted_softmax_rows", [](Gen& g, std::uint64_t s, Checker& chk) {
                 std::uniform_real_distribution<double> u(0.0, 1.0);
                 std::vector<double> w(16);
                 for (std::size_t i = 0; i < 16; ++i) w[i] = (i % 5 == 0 || u(g) > 0.3) ? 0.1 + u(g) : 0.0;
                 chk([&](const auto& in) {
                   using X = typename std::decay_t<decltype(in[0])>::value_type;
                   const std::vector<X> wx(w.begin(), w.end());
                   return project(ops::weighted_softmax_rows(in[0], std::span<const X>(wx)), s);
                 }, {randn({4, 4}, g)});
                 return true;
               }});
  c.push_back({"primitives", "masked_logsumexp_rows", [](Gen& g, std::uint64_t s, Checker& chk) {
                 std::vector<std::uint8_t> keep(16);
                 for (std::size_t i = 0; i < 16; ++i) keep[i] = (i % 5 == 0 || g() % 3 != 0) ? 1 : 0;
                 chk([&](const auto& in) { return project(ops::masked_logsumexp_rows(in[0], keep), s); },
                     {randn({4, 4}, g)});
                 return true;
               }});
  c.push_back({"primitives", "layer_norm", [](Gen& g, std::uint64_t s, Checker& chk) {
                 chk([&](const auto& in) {
                   using X = typename std::decay_t<decltype(in[0])>::value_type;
                   return project(ops::layer_norm(in[0], in[1], in[2], X(1e-5)), s);
                 }, {randn({3, 6}, g), randn({6}, g), randn({6}, g)});
                 return true;
               }});
  c.push_back({"primitives", "depthwise_conv3d", [](Gen& g, std::uint64_t s, Checker& chk) {
                 chk([&](const auto& in) { return project(ops::depthwise_conv3d(in[0], in[1]), s); },
                     {randn({2, 3, 4, 3}, g), randn({2, 3, 3, 3}, g)});
                 return true;
               }});
  for (std::size_t stride : {1, 2}) {
    c.push_back({"primitives", "conv2d_stride" + std::to_string(stride), [stride](Gen& g, std::uint64_t s, Checker& chk) {
                   chk([&](const auto& in) { return project(ops::conv2d(in[0], in[1], in[2], stride, 1), s); },
                       {randn({2, 3, 5, 5}, g), randn({4, 3, 3, 3}, g), randn({4}, g)});
                   return true;
                 }});
  }
  c.push_back({"primitives", "upsample_nearest2d", [](Gen& g, std::uint64_t s, Checker& chk) {
                 chk([&](const auto& in) { return project(ops::exp(ops::upsample_nearest2d(in[0], 2)), s); },
                     {randn({1, 2, 2, 3}, g, 0.5)});
                 return true;
               }});
  return c;
}

Case vsa_case() {
  return {"vsa", "spatial_adapter", [](Gen& g, std::uint64_t s, Checker& chk) {
            const TokenGrid grid{2, 3, 2};
            Rng rng(s);
            auto p = VsaParams<double>::init(8, 4, rng);
            std::vector<TD> in{randn({grid.tokens(), 8}, g)};
            p.visit("", [&](const std::string&, TD& t) { in.push_back(randn(t.shape(), g, 0.5)); });
            chk([&](const auto& x) {
              using X = typename std::decay_t<decltype(x[0])>::value_type;
              VsaParams<X> q{x[1], x[2], x[3], x[4], x[5]};
              return project(vsa_forward(x[0], grid, q), s);
            }, in);
            return true;
          }};
}

Case gat_case(bool diffused) {
  return {"vsgc", diffused ? "gat_diffused_view" : "gat", [diffused](Gen& g, std::uint64_t s, Checker& chk) {
            Rng rng(s);
            auto p = GatParams<double>::init(6, 6, 2, rng);
            std::vector<TD> in{randn({5, 6}, g)};
            for (auto& l : p.layers) {
              l.a_src = randn(l.a_src.shape(), g, 0.7);
              l.a_dst = randn(l.a_dst.shape(), g, 0.7);
              in.insert(in.end(), {l.w, l.a_src, l.a_dst});
            }
            TD adj = knn_graph(in[0], 2);
            if (diffused) adj = TD({5, 5}, ppr_matrix(adj.data(), 5, 0.15));
            if (kink_margin(gat_forward(in[0], adj, p), adj) < kKinkMargin) return false;
            chk([&](const auto& x) {
              using X = typename std::decay_t<decltype(x[0])>::value_type;
              GatParams<X> q;
              q.layers = {{x[1], x[2], x[3]}, {x[4], x[5], x[6]}};
              return project(gat_forward(x[0], adj.cast<X>(), q).z, s);
            }, in);
            return true;
          }};
}

Case contrastive_case() {
  return {"vsgc", "contrastive", [](Gen& g, std::uint64_t, Checker& chk) {
            chk([](const auto& x) { return contrastive_loss(x[0], x[1], 0.8); }, {randn({4, 5}, g), randn({4, 5}, g)});
            return true;
          }};
}

Case vsgc_case() {
  return {"vsgc", "slice_graph_completion", [](Gen& g, std::uint64_t s, Checker& chk) {
            const TokenGrid grid{4, 2, 2};
            const std::vector<std::uint8_t> missing = {0, 1, 0, 1};
            Rng rng(s);
            auto p = VsgcParams<double>::init(6, 8, 8, 2, 6, rng);
            p.fusion_w = randn(p.fusion_w.shape(), g, 0.3);
            p.fusion_b = randn(p.fusion_b.shape(), g, 0.1);
            p.node_b = randn(p.node_b.shape(), g, 0.1);
            std::vector<TD> in{randn({grid.tokens(), 6}, g)};
            p.visit("", [&](const std::string&, TD& t) { in.push_back(t); });
            if (vsgc_apply(in[0], grid, missing, p, VsgcOptions{}).views.kink_margin < kKinkMargin) return false;
            chk([&](const auto& x) {
              using X = typename std::decay_t<decltype(x[0])>::value_type;
              VsgcParams<X> q;
              q.gat.layers.resize(2);
              std::size_t i = 1;
              q.visit("", [&](const std::string&, Tensor<X>& t) { t = x[i++]; });
              auto res = vsgc_apply(x[0], grid, missing, q, VsgcOptions{});
              return ops::add(project(res.tokens, s), res.loss);
            }, in);
            return true;
          }};
}

BackboneConfig block_config() {
  BackboneConfig c;
  c.n_blocks = 4;
  c.embed_dim = 8;
  c.n_heads = 2;
  c.mlp_ratio = 2;
  c.vsa_reduction = 4;
  c.skip_taps = {1, 2, 3, 4};
  c.vsgc_taps = {1, 2, 4};
  c.node_dim = 8;
  c.gat_dim = 8;
  c.max_slices = 8;
  c.height = 16;
  c.width = 16;
  c.decoder_channels = 4;
  c.stem_channels = 4;
  return c;
}

Case block_case() {
  return {"backbone", "transformer_block", [](Gen& g, std::uint64_t s, Checker& chk) {
            const auto cfg = block_config();
            const TokenGrid grid{2, 2, 2};
            Rng rng(s);
            auto p = BlockParams<double>::init(cfg, rng);
            std::vector<TD> in{randn({grid.tokens(), cfg.embed_dim}, g)};
            p.visit("", [&](const std::string&, TD& t) { in.push_back(randn(t.shape(), g, 0.5)); });
            chk([&](const auto& x) {
              using X = typename std::decay_t<decltype(x[0])>::value_type;
              Rng unused(0);
              auto q = BlockParams<X>::init(cfg, unused);
              std::size_t i = 1;
              q.visit("", [&](const std::string&, Tensor<X>& t) { t = x[i++]; });
              return project(transformer_block(x[0], q, grid, cfg), s);
            }, in);
            return true;
          }};
}

std::vector<Case> all_cases() {
  auto c = primitive_cases();
  c.push_back(vsa_case());
  c.push_back(gat_case(false));
  c.push_back(gat_case(true));
  c.push_back(contrastive_case());
  c.push_back(vsgc_case());
  c.push_back(block_case());
  return c;
}

}  // namespace

std::vector<std::string> gradcheck_modules() { return {"primitives", "vsa", "vsgc", "backbone"}; }

std::vector<GradCheckRecord> run_gradcheck_suite(std::string_view module, std::size_t seeds) {
  const auto known = gradcheck_modules();
  if (module != "all" && std::find(known.begin(), known.end(), module) == known.end()) {
    throw ConfigError("gradcheck: unknown module '" + std::string(module) + "'");
  }
  std::vector<GradCheckRecord> out;
  for (const auto& c : all_cases()) {
    if (module != "all" && c.module != module) continue;
    GradCheckRecord r{c.module, c.name};
    r.required = seeds;
    Checker chk;
    std::uint64_t draw = 0;
    while (r.seeds < seeds && draw < seeds * kMaxDrawsPerSeed) {
      Gen g(derive_seed(0x67726164, draw));
      if (c.run(g, draw, chk)) {
        ++r.seeds;
      } else {
        ++r.skipped;
      }
      ++draw;
    }
    r.err_f64 = chk.f64;
    r.err_f32 = chk.f32;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sagc
