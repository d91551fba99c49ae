// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sagc/gradcheck.hpp"
#include "sagc/slice_graph.hpp"
#include "test_util.hpp"

using namespace sagc;
using testutil::random_tensor;
using TD = Tensor<double>;

namespace {

std::vector<double> values(const TD& t) { return {t.data().begin(), t.data().end()}; }

TD random_adjacency(std::size_t n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) a[i * n + j] = a[j * n + i] = 1.0;
  return TD({n, n}, a);
}

// Truncated power series alpha * sum_k ((1 - alpha) P)^k with P = D^-1 (A + I).
std::vector<double> neumann_ppr(const std::vector<double>& adj, std::size_t n, double alpha, int terms) {
  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1;
    for (std::size_t j = 0; j < n; ++j) deg += (i == j) ? 0 : adj[i * n + j];
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = ((i == j) ? 1 : adj[i * n + j]) / deg;
  }
  std::vector<double> power(n * n, 0.0), acc(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) power[i * n + i] = 1;
  for (int k = 0; k < terms; ++k) {
    for (std::size_t i = 0; i < n * n; ++i) acc[i] += alpha * power[i];
    std::vector<double> next(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) next[i * n + j] += (1 - alpha) * power[i * n + m] * p[m * n + j];
    power = next;
  }
  return acc;
}

// Loss written directly from its definition with explicit exponentials.
double loop_contrastive(const TD& a, const TD& s, double tau) {
  const std::size_t n = a.dim(0), d = a.dim(1);
  auto cos = [&](const TD& x, std::size_t i, const TD& y, std::size_t j) {
    double dot = 0, nx = 0, ny = 0;
    for (std::size_t c = 0; c < d; ++c) {
      dot += x.at(i * d + c) * y.at(j * d + c);
      nx += x.at(i * d + c) * x.at(i * d + c);
      ny += y.at(j * d + c) * y.at(j * d + c);
    }
    return dot / std::sqrt(nx * ny);
  };
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double den_a = 0, den_s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      den_a += std::exp(cos(a, i, s, j) / tau);
      den_s += std::exp(cos(s, i, a, j) / tau);
    }
    total += std::log(std::exp(cos(a, i, s, i) / tau) / den_a) + std::log(std::exp(cos(s, i, a, i) / tau) / den_s);
  }
  return -total / (2.0 * n);
}

VsgcParams<double> live_vsgc_params(std::size_t c, std::size_t d, std::size_t max_slices, std::uint64_t seed) {
  Rng rng(seed);
  auto p = VsgcParams<double>::init(c, d, d, 2, max_slices, rng);
  std::mt19937_64 g(seed + 1);
  testutil::fill_random(p.fusion_w, g, 0.3);
  testutil::fill_random(p.fusion_b, g, 0.1);
  testutil::fill_random(p.node_b, g, 0.1);
  return p;
}

}  // namespace

// ---- kNN graph ----

TEST(KnnGraph, FullNeighbourhoodGivesCompleteGraph) {
  std::mt19937_64 rng(1);
  auto x = random_tensor({6, 4}, rng);
  auto a = knn_graph(x, 5);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(a.at(i * 6 + j), i == j ? 0.0 : 1.0);
}

TEST(KnnGraph, CollinearPointsWithIndexTieBreak) {
  TD x({4, 1}, {0, 1, 2, 10});
  auto a = knn_graph(x, 1, KnnMetric::euclidean);
  const std::vector<double> expected = {0, 1, 0, 0,  //
                                        1, 0, 1, 0,  //
                                        0, 1, 0, 1,  //
                                        0, 0, 1, 0};
  EXPECT_EQ(values(a), expected);
}

TEST(KnnGraph, CosineTieGoesToLowerIndex) {
  // Nodes 1 and 2 are equally far (in angle) from node 0.
  TD x({3, 2}, {1, 0, 0.6, 0.8, 0.6, -0.8});
  auto a = knn_graph(x, 1);
  EXPECT_EQ(a.at(0 * 3 + 1), 1.0);
  EXPECT_EQ(a.at(0 * 3 + 2), 0.0 + a.at(2 * 3 + 0));  // only present if node 2 chose node 0
}

TEST(KnnGraph, SymmetricZeroDiagonalAndDegreeBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 12, k = 3;
    auto a = knn_graph(random_tensor({n, 8}, rng), k);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(a.at(i * n + i), 0.0);
      double deg = 0;
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_EQ(a.at(i * n + j), a.at(j * n + i));
        deg += a.at(i * n + j);
      }
      EXPECT_GE(deg, static_cast<double>(k));
    }
  }
}

TEST(KnnGraph, RejectsOversizedK) {
  EXPECT_THROW(knn_graph(TD::zeros({3, 2}), 3), ConfigError);
  EXPECT_THROW(knn_graph(TD::zeros({3, 2}), 0), ConfigError);
}

TEST(KnnGraph, IncompleteEdgesTouchMissingNodes) {
  std::vector<double> adj = {0, 1, 0, 1, 0, 1, 0, 1, 0};
  std::vector<std::uint8_t> missing = {0, 0, 1};
  auto f = incomplete_edges(adj, missing);
  EXPECT_EQ(f, (std::vector<std::uint8_t>{0, 0, 0, 0, 0, 1, 0, 1, 0}));
}

// ---- attribute view ----

TEST(AttributeView, NoMissingIsIdentity) {
  std::mt19937_64 rng(2);
  auto x = random_tensor({4, 3}, rng), comp = random_tensor({6, 3}, rng);
  std::vector<std::uint8_t> missing(4, 0);
  EXPECT_EQ(values(attribute_view(x, missing, comp)), values(x));
}

TEST(AttributeView, AllMissingIsCompletionRows) {
  std::mt19937_64 rng(3);
  auto x = random_tensor({4, 3}, rng), comp = random_tensor({6, 3}, rng);
  std::vector<std::uint8_t> missing(4, 1);
  auto y = values(attribute_view(x, missing, comp));
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(y[i], comp.at(i));
}

TEST(AttributeView, CompletionGradientOnlyAtMissingRows) {
  std::mt19937_64 rng(4);
  auto x = random_tensor({5, 3}, rng);
  auto comp = random_tensor({7, 3}, rng).clone(true);
  std::vector<std::uint8_t> missing = {0, 1, 0, 1, 0};
  auto loss = testutil::project(ops::mul(attribute_view(x, missing, comp), attribute_view(x, missing, comp)), 9);
  loss.backward();
  const auto g = comp.grad();
  for (std::size_t r = 0; r < 7; ++r) {
    const bool live = r < 5 && missing[r];
    for (std::size_t c = 0; c < 3; ++c) {
      if (live) EXPECT_NE(g[r * 3 + c], 0.0);
      else EXPECT_EQ(g[r * 3 + c], 0.0);
    }
  }
  ScalarFn<double> f = [&](const TD& cp) {
    auto v = attribute_view(x, missing, cp);
    return testutil::project(ops::mul(v, v), 9);
  };
  EXPECT_LT(grad_check(f, comp.detach(), 1e-5), 1e-6);
}

// ---- structure view ----

TEST(StructureView, AlphaOneIsPureTeleport) {
  std::mt19937_64 rng(5);
  auto x = random_tensor({5, 3}, rng);
  auto adj = random_adjacency(5, 0.5, rng);
  std::vector<std::uint8_t> missing = {0, 1, 0, 0, 1};
  auto sv = structure_view(x, adj, missing, 1.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(sv.adj.at(i * 5 + j), i == j ? 1.0 : 0.0, 1e-15);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(sv.x.at(i * 3 + c), missing[i] ? 0.0 : x.at(i * 3 + c), 1e-15);
}

TEST(StructureView, TwoNodeClosedFormMatchesPowerSeries) {
  const std::vector<double> adj = {0, 1, 1, 0};
  auto pi = ppr_matrix(adj, 2, 0.5);
  auto ref = neumann_ppr(adj, 2, 0.5, 200);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(pi[i], ref[i], 1e-10);
}

TEST(StructureView, RandomGraphsMatchPowerSeriesAndAreRowStochastic) {
  for (double alpha : {0.1, 0.15, 0.5}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      const std::size_t n = 3 + seed % 9;
      auto adj = values(random_adjacency(n, 0.4, rng));
      auto pi = ppr_matrix(adj, n, alpha);
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) {
          row += pi[i * n + j];
          EXPECT_GE(pi[i * n + j], -1e-15);
        }
        EXPECT_NEAR(row, 1.0, 1e-8);
      }
      auto ref = neumann_ppr(adj, n, alpha, 400);
      for (std::size_t i = 0; i < n * n; ++i) EXPECT_NEAR(pi[i], ref[i], 1e-9);
    }
  }
}

TEST(StructureView, DiffusionFillsMissingNodes) {
  TD x({3, 1}, {1.0, 99.0, 3.0});
  TD adj({3, 3}, {0, 1, 0, 1, 0, 1, 0, 1, 0});
  std::vector<std::uint8_t> missing = {0, 1, 0};
  auto sv = structure_view(x, adj, missing, 0.15);
  EXPECT_GT(sv.x.at(1), 0.0);
  EXPECT_LT(sv.x.at(1), 3.0);
}

TEST(StructureView, RejectsBadAlpha) {
  EXPECT_THROW(ppr_matrix(std::vector<double>{0, 1, 1, 0}, 2, 0.0), ConfigError);
  EXPECT_THROW(ppr_matrix(std::vector<double>{0, 1, 1, 0}, 2, 1.5), ConfigError);
}

// ---- GAT ----

TEST(Gat, SingleNodeReducesToStackedProjections) {
  Rng rng(6);
  auto p = GatParams<double>::init(4, 3, 2, rng);
  std::mt19937_64 g(7);
  auto x = random_tensor({1, 4}, g);
  auto out = gat_forward(x, TD::zeros({1, 1}), p);
  auto ref = ops::matmul(ops::elu(ops::matmul(x, p.layers[0].w)), p.layers[1].w);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out.z.at(i), ref.at(i), 1e-14);
  for (const auto& a : out.attention) EXPECT_EQ(a.at(0), 1.0);
}

TEST(Gat, IdenticalPairSplitsAttentionEvenly) {
  Rng rng(8);
  auto p = GatParams<double>::init(4, 4, 2, rng);
  TD x({2, 4}, {0.3, -1, 2, 0.5, 0.3, -1, 2, 0.5});
  auto out = gat_forward(x, TD({2, 2}, {0, 1, 1, 0}), p);
  for (const auto& a : out.attention)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a.at(i), 0.5, 1e-15);
}

TEST(Gat, AttentionRowsSumToOneAndRespectGraph) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    Rng init_rng(seed);
    const std::size_t n = 7;
    auto p = GatParams<double>::init(5, 6, 2, init_rng);
    auto adj = random_adjacency(n, 0.3, rng);
    auto out = gat_forward(random_tensor({n, 5}, rng), adj, p);
    for (const auto& a : out.attention)
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) {
          row += a.at(i * n + j);
          if (i != j && adj.at(i * n + j) == 0.0) EXPECT_EQ(a.at(i * n + j), 0.0);
        }
        EXPECT_NEAR(row, 1.0, 1e-6);
      }
  }
}

TEST(Gat, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  Rng init_rng(9);
  auto p = GatParams<double>::init(6, 6, 2, init_rng);
  for (auto& l : p.layers) {
    testutil::fill_random(l.a_src, rng, 0.7);
    testutil::fill_random(l.a_dst, rng, 0.7);
  }
  auto x = random_tensor({4, 6}, rng);
  TD adj({4, 4}, {0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0});
  ScalarFnN<double> f = [&](const std::vector<TD>& in) {
    GatParams<double> q;
    q.layers = {{in[1], in[2], in[3]}, {in[4], in[5], in[6]}};
    return testutil::project(gat_forward(in[0], adj, q).z, 17);
  };
  std::vector<TD> inputs = {x};
  for (auto& l : p.layers) inputs.insert(inputs.end(), {l.w, l.a_src, l.a_dst});
  EXPECT_LT(grad_check(f, inputs, 1e-4), 1e-4);
}

TEST(Gat, WeightedViewGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(10);
  Rng init_rng(10);
  auto p = GatParams<double>::init(5, 4, 2, init_rng);
  auto pi = ppr_matrix(values(random_adjacency(5, 0.5, rng)), 5, 0.15);
  TD adj({5, 5}, pi);
  auto x = random_tensor({5, 5}, rng);
  ScalarFn<double> f = [&](const TD& in) { return testutil::project(gat_forward(in, adj, p).z, 3); };
  EXPECT_LT(grad_check(f, x, 1e-4), 1e-5);
}

// ---- contrastive loss ----

TEST(Contrastive, IdenticalEmbeddingsGiveLogOfNegatives) {
  TD z({3, 2}, {0.4, 0.7, 0.4, 0.7, 0.4, 0.7});
  for (double tau : {0.1, 0.8, 3.0}) EXPECT_NEAR(contrastive_loss(z, z, tau).item(), std::log(2.0), 1e-6);
}

TEST(Contrastive, OrthogonalPositivesClosedForm) {
  TD z({3, 3}, {2, 0, 0, 0, 0.5, 0, 0, 0, 1});
  EXPECT_NEAR(contrastive_loss(z, z, 0.8).item(), std::log(2.0) - 1.0 / 0.8, 1e-6);
}

TEST(Contrastive, MatchesDefinitionLoop) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    auto a = random_tensor({6, 5}, rng), s = random_tensor({6, 5}, rng);
    EXPECT_NEAR(contrastive_loss(a, s, 0.8).item(), loop_contrastive(a, s, 0.8), 1e-10);
  }
}

TEST(Contrastive, DecreasesAsPositivesAlign) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 100);
    auto a = random_tensor({5, 4}, rng), s = random_tensor({5, 4}, rng);
    // Pull one positive partner toward its anchor; negatives for other rows barely move.
    const std::size_t i = seed % 5;
    std::vector<double> moved(s.data().begin(), s.data().end());
    for (std::size_t c = 0; c < 4; ++c) moved[i * 4 + c] = 0.5 * moved[i * 4 + c] + 0.5 * a.at(i * 4 + c);
    TD s2({5, 4}, moved);
    const double before = loop_contrastive(a, s, 0.8), after = loop_contrastive(a, s2, 0.8);
    const double cos_before = ops::cosine_sim(ops::slice(a, 0, i, 1), ops::slice(s, 0, i, 1)).item();
    const double cos_after = ops::cosine_sim(ops::slice(a, 0, i, 1), ops::slice(s2, 0, i, 1)).item();
    ASSERT_GT(cos_after, cos_before);
    // Directional derivative along the move agrees in sign with the change.
    auto sv = s.clone(true);
    auto loss = contrastive_loss(a, sv, 0.8);
    loss.backward();
    const auto g = sv.grad();
    double dd = 0;
    for (std::size_t k = 0; k < 20; ++k) dd += g[k] * (moved[k] - s.at(k));
    EXPECT_NEAR(contrastive_loss(a, s2, 0.8).item(), after, 1e-12);
    if (after < before) EXPECT_LT(dd, 0.0);
  }
  // Pure positive alignment with fixed negatives: anchors and partners equal in direction.
  TD a({3, 2}, {1, 0, 0, 1, -1, 0});
  TD s_far({3, 2}, {0.2, 1, 0, 1, -1, 0});
  TD s_near({3, 2}, {1, 0.2, 0, 1, -1, 0});
  EXPECT_LT(contrastive_loss(a, s_near, 0.8).item(), contrastive_loss(a, s_far, 0.8).item());
}

TEST(Contrastive, ContractViolations) {
  EXPECT_THROW(contrastive_loss(TD({1, 2}, {1, 0}), TD({1, 2}, {1, 0}), 0.8), ContractError);
  EXPECT_THROW(contrastive_loss(TD({2, 2}, {1, 0, 0, 1}), TD({2, 2}, {1, 0, 0, 1}), 0.0), ContractError);
  EXPECT_THROW(contrastive_loss(TD({2, 2}, {1, 0, 0, 0}), TD({2, 2}, {1, 0, 0, 1}), 0.8), DegenerateInputError);
}

TEST(Contrastive, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  auto a = random_tensor({4, 5}, rng), s = random_tensor({4, 5}, rng);
  ScalarFnN<double> f = [](const std::vector<TD>& in) { return contrastive_loss(in[0], in[1], 0.8); };
  EXPECT_LT(grad_check(f, {a, s}, 1e-4), 1e-6);
}

// ---- token pooling and the full module ----

TEST(TokensToNodes, EqualTokensGiveAdapterOfThatVector) {
  const TokenGrid g{3, 2, 2};
  std::mt19937_64 rng(12);
  auto w = random_tensor({4, 6}, rng), b = random_tensor({6}, rng);
  std::vector<double> tok(g.tokens() * 4);
  const double v[3][4] = {{1, 2, 3, 4}, {-1, 0, 0.5, 2}, {0, 0, 0, 0}};
  for (std::size_t t = 0; t < g.tokens(); ++t)
    for (std::size_t c = 0; c < 4; ++c) tok[t * 4 + c] = v[t / 4][c];
  auto nodes = tokens_to_nodes(TD({g.tokens(), 4}, tok), g, 3, w, b);
  ASSERT_EQ(nodes.shape(), (Shape{3, 6}));
  for (std::size_t i = 0; i < 3; ++i) {
    auto ref = ops::linear(TD({1, 4}, {v[i][0], v[i][1], v[i][2], v[i][3]}), w, b);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(nodes.at(i * 6 + j), ref.at(j), 1e-14);
  }
}

TEST(TokensToNodes, OneNodePerSliceAndPadsExcluded) {
  std::mt19937_64 rng(13);
  auto w = random_tensor({4, 6}, rng), b = random_tensor({6}, rng);
  auto x = random_tensor({12 * 16, 4}, rng);
  EXPECT_EQ(tokens_to_nodes(x, TokenGrid{12, 4, 4}, 12, w, b).dim(0), 12u);
  EXPECT_EQ(tokens_to_nodes(x, TokenGrid{12, 4, 4}, 9, w, b).dim(0), 9u);
  EXPECT_THROW(tokens_to_nodes(x, TokenGrid{12, 4, 4}, 0, w, b), DegenerateInputError);
}

TEST(TokensToNodes, InvariantToInPlanePermutation) {
  const TokenGrid g{2, 2, 3};
  std::mt19937_64 rng(14);
  auto w = random_tensor({4, 5}, rng), b = random_tensor({5}, rng);
  auto x = random_tensor({g.tokens(), 4}, rng);
  std::vector<std::size_t> perm(g.tokens());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin() + 6, perm.end(), rng);  // shuffle slice 1 only
  auto y = ops::gather_rows<double>(x, perm);
  auto a = tokens_to_nodes(x, g, 2, w, b), c = tokens_to_nodes(y, g, 2, w, b);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.at(i), c.at(i), 1e-13);
}

TEST(Vsgc, ZeroFusionLeavesTokensUnchangedButComputesLoss) {
  const TokenGrid g{6, 2, 2};
  Rng rng(15);
  auto p = VsgcParams<double>::init(8, 8, 8, 2, 10, rng);
  std::mt19937_64 r(16);
  auto x = random_tensor({g.tokens(), 8}, r);
  std::vector<std::uint8_t> missing = {0, 1, 0, 0, 1, 0};
  auto res = vsgc_apply(x, g, missing, p, VsgcOptions{});
  EXPECT_EQ(values(res.tokens), values(x));
  EXPECT_TRUE(std::isfinite(res.loss.item()));
}

TEST(Vsgc, TwoNodeGraphRuns) {
  const TokenGrid g{2, 2, 2};
  auto p = live_vsgc_params(4, 4, 2, 17);
  std::mt19937_64 r(18);
  std::vector<std::uint8_t> missing = {0, 1};
  auto res = vsgc_apply(random_tensor({g.tokens(), 4}, r), g, missing, p, VsgcOptions{});
  EXPECT_TRUE(std::isfinite(res.loss.item()));
}

TEST(Vsgc, CorrectionIsConstantWithinEachSliceAndZeroOnPads) {
  const TokenGrid g{7, 2, 3};
  auto p = live_vsgc_params(6, 8, 8, 19);
  std::mt19937_64 r(20);
  auto x = random_tensor({g.tokens(), 6}, r);
  std::vector<std::uint8_t> missing = {0, 1, 0, 0, 1};  // two pad slices at the end
  auto res = vsgc_apply(x, g, missing, p, VsgcOptions{});
  const std::size_t per = g.tokens_per_slice();
  for (std::size_t s = 0; s < g.depth; ++s)
    for (std::size_t t = 0; t < per; ++t)
      for (std::size_t c = 0; c < 6; ++c) {
        const std::size_t i = (s * per + t) * 6 + c, first = (s * per) * 6 + c;
        const double delta = res.tokens.at(i) - x.at(i);
        EXPECT_NEAR(delta, res.tokens.at(first) - x.at(first), 1e-12);
        if (s >= missing.size()) EXPECT_EQ(delta, 0.0);
      }
}

TEST(Vsgc, ViewsRespectAblationSwitches) {
  const TokenGrid g{5, 2, 2};
  auto p = live_vsgc_params(4, 6, 8, 21);
  std::mt19937_64 r(22);
  auto x = random_tensor({g.tokens(), 4}, r);
  std::vector<std::uint8_t> missing = {1, 0, 0, 1, 0};
  VsgcOptions full, no_attr, no_struct;
  no_attr.attribute_view = false;
  no_struct.structure_view = false;
  auto a = vsgc_apply(x, g, missing, p, full);
  auto b = vsgc_apply(x, g, missing, p, no_attr);
  auto c = vsgc_apply(x, g, missing, p, no_struct);
  EXPECT_EQ(values(a.views.x_a).at(0), p.completion.at(0));
  EXPECT_EQ(values(b.views.x_a), values(b.graph.x));
  EXPECT_EQ(values(c.views.adj_s), values(c.graph.adj));
  for (std::size_t i = 0; i < 5; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < 5; ++j) row += a.views.adj_s.at(i * 5 + j);
    EXPECT_NEAR(row, 1.0, 1e-8);
  }
  for (const auto& att : a.views.attention_s)
    for (std::size_t i = 0; i < 5; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < 5; ++j) row += att.at(i * 5 + j);
      EXPECT_NEAR(row, 1.0, 1e-6);
    }
}

namespace {

std::vector<TD> vsgc_inputs(const TD& x, VsgcParams<double>& p) {
  std::vector<TD> in = {x};
  p.visit("", [&](const std::string&, TD& t) { in.push_back(t); });
  return in;
}

template <typename T>
VsgcParams<T> unpack(const std::vector<Tensor<T>>& in) {
  VsgcParams<T> q;
  q.gat.layers.resize(2);
  std::size_t i = 1;
  q.visit("", [&](const std::string&, Tensor<T>& t) { t = in[i++]; });
  return q;
}

}  // namespace

TEST(Vsgc, FullModuleGradientsMatchFiniteDifferences) {
  const TokenGrid g{4, 2, 2};
  std::vector<std::uint8_t> missing = {0, 1, 0, 1};
  int accepted = 0;
  for (std::uint64_t seed = 0; accepted < 5 && seed < 50; ++seed) {
    auto p = live_vsgc_params(6, 8, 6, 30 + seed);
    std::mt19937_64 r(40 + seed);
    auto x = random_tensor({g.tokens(), 6}, r);
    // Finite differences are only meaningful away from LeakyReLU kinks.
    if (vsgc_apply(x, g, missing, p, VsgcOptions{}).views.kink_margin < 1e-2) continue;
    ++accepted;
    auto fn = [&](const auto& in) {
      auto res = vsgc_apply(in[0], g, missing, unpack(in), VsgcOptions{});
      return ops::add(testutil::project(res.tokens, 5), res.loss);
    };
    auto inputs = vsgc_inputs(x, p);
    EXPECT_LT(grad_check_precise<double>(fn, inputs, 1e-4), 1e-5) << "seed " << seed;
    EXPECT_LT(grad_check_precise<float>(fn, inputs, 1e-4), 1e-3) << "seed " << seed;
  }
  EXPECT_EQ(accepted, 5);
}
