// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sagc/errors.hpp"
#include "sagc/trainer.hpp"

using namespace sagc;

namespace {

const char* kMicro = R"(
n_blocks = 4
embed_dim = 16
n_heads = 2
mlp_ratio = 2
skip_taps = 1,2,3,4
vsgc_taps = 1,2,4
node_dim = 8
gat_dim = 8
max_slices = 8
size = 16
decoder_channels = 8
stem_channels = 4
n_slices = 6
n_train = 2
n_test = 2
batch_size = 2
max_steps = 3
eta = 0.34
)";

// The micro config with `extra` entries replacing same-named ones.
TrainConfig micro(const std::string& extra = {}) {
  std::set<std::string> overridden;
  for (const auto& e : parse_config_text(extra)) overridden.insert(e.key);
  std::string text;
  for (const auto& e : parse_config_text(kMicro)) {
    if (!overridden.count(e.key)) text += e.key + " = " + e.value + "\n";
  }
  return TrainConfig::parse(text + extra);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("sagc_trainer_" + name);
  std::filesystem::remove_all(d);
  return d;
}

Volume ramp_volume(std::size_t n, std::size_t h, std::size_t w) {
  std::vector<float> data(n * h * w);
  for (std::size_t z = 0; z < n; ++z)
    for (std::size_t i = 0; i < h * w; ++i) data[z * h * w + i] = -1.0f + 0.25f * static_cast<float>(z) + 0.01f * (i % 7);
  return Volume::complete(n, h, w, data);
}

}  // namespace

// --------------------------------------------------------------- schedule

TEST(CosineLr, EndpointsAndMidpoint) {
  EXPECT_EQ(cosine_lr(0, 100, 1e-4, 5e-6), 1e-4);
  EXPECT_NEAR(cosine_lr(100, 100, 1e-4, 5e-6), 5e-6, 1e-20);
  EXPECT_NEAR(cosine_lr(50, 100, 1e-4, 5e-6), 5.25e-5, 1e-18);
  EXPECT_THROW(cosine_lr(101, 100, 1e-4, 5e-6), ContractError);
}

TEST(CosineLr, MonotoneNonIncreasing) {
  double prev = cosine_lr(0, 997, 1e-4, 5e-6);
  for (std::size_t s = 1; s <= 997; ++s) {
    const double lr = cosine_lr(s, 997, 1e-4, 5e-6);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

// ------------------------------------------------------------------- adam

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<Tensor<double>> p = {Tensor<double>({3}, {1.0, -2.0, 0.5})};
  AdamState st;
  for (int i = 0; i < 3; ++i) adam_step(p, {{0.0, 0.0, 0.0}}, {"w"}, st, 1e-3);
  EXPECT_EQ(st.step, 3u);
  EXPECT_EQ(p[0].at(0), 1.0);
  EXPECT_EQ(p[0].at(1), -2.0);
  EXPECT_EQ(p[0].at(2), 0.5);
}

TEST(Adam, MatchesScalarReference) {
  // Hand-rolled Adam on f(x) = (x - 3)^2.
  double x = 0.5, m = 0, v = 0;
  std::vector<Tensor<double>> p = {Tensor<double>({1}, {0.5})};
  AdamState st;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2 * (x - 3);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    adam_step(p, {{2 * (p[0].at(0) - 3)}}, {"x"}, st, 0.01);
    EXPECT_NEAR(p[0].at(0), x, 1e-10) << "step " << t;
  }
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  std::vector<Tensor<double>> p = {Tensor<double>({2}, {0.0, 0.0})};
  AdamState st;
  double before = 0;
  for (int t = 0; t < 2000; ++t) {
    before = p[0].at(0);
    adam_step(p, {{0.37, -12.0}}, {"w"}, st, 1e-3);
  }
  EXPECT_NEAR(before - p[0].at(0), 1e-3, 1e-9);
  EXPECT_NEAR(p[0].at(1), 2000 * 1e-3, 1e-8);
}

TEST(Adam, NonFiniteGradientNamesTheParameter) {
  std::vector<Tensor<float>> p = {Tensor<float>({1}, {0.f}), Tensor<float>({2}, {0.f, 0.f})};
  AdamState st;
  try {
    adam_step(p, {{0.f}, {1.f, std::nanf("")}}, {"first", "decoder.head_w"}, st, 1e-3);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.head_w"), std::string::npos);
  }
}

TEST(GradClip, ScalesToMaxNorm) {
  std::vector<std::vector<double>> g = {{3.0}, {4.0, 0.0}};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(g[0][0], 0.6);
  EXPECT_DOUBLE_EQ(g[1][0], 0.8);
  std::vector<std::vector<double>> small = {{0.3}};
  clip_global_norm(small, 1.0);
  EXPECT_EQ(small[0][0], 0.3);
}

// ----------------------------------------------------------------- config

TEST(TrainConfig, DefaultsFollowTheRecipe) {
  const auto c = TrainConfig::parse("");
  EXPECT_EQ(c.lr_init, 1e-4);
  EXPECT_EQ(c.lr_final, 5e-6);
  EXPECT_EQ(c.loss.lambda_rec, 5.0);
  EXPECT_EQ(c.loss.lambda_syn, 20.0);
  EXPECT_EQ(c.loss.lambda_cl, 0.001);
  EXPECT_EQ(c.model.k_nn, 3u);
  EXPECT_EQ(c.model.tau, 0.8);
  EXPECT_EQ(c.total_steps(), 30u * 20);
}

TEST(TrainConfig, RejectsBadInput) {
  try {
    TrainConfig::parse("epochs = 2\nlearning_rate = 0.1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(TrainConfig::parse("eta = 1.0"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("eta = -0.1"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("lr_final = 1e-3"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("n_heads = 3"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("batch_size = 0"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("ablation = no_gat"), ConfigError);
}

TEST(TrainConfig, FlagsAndSize) {
  const auto c = TrainConfig::parse("size = 16\nno_vsgc = true\n");
  EXPECT_EQ(c.model.height, 16u);
  EXPECT_EQ(c.model.width, 16u);
  EXPECT_TRUE(c.model.ablation.no_vsgc);
}

// --------------------------------------------------------------- training

TEST(Train, SameSeedGivesIdenticalTraceAndCheckpoint) {
  const auto d1 = temp_dir("det1"), d2 = temp_dir("det2");
  auto c = micro();
  c.out_dir = d1.string();
  train(c);
  c.out_dir = d2.string();
  train(c);
  EXPECT_EQ(read_text(d1 / "trace.csv"), read_text(d2 / "trace.csv"));
  EXPECT_EQ(read_text(d1 / "checkpoint.sgck"), read_text(d2 / "checkpoint.sgck"));
  EXPECT_EQ(read_text(d1 / "trace.csv").substr(0, 23), "step,lr,total,rec,syn,c");
  auto other = micro("seed = 1\n");
  EXPECT_NE(train(other).trace[0].total, train(micro()).trace[0].total);
}

TEST(Train, NoGraphVariantLogsZeroContrastiveLoss) {
  for (const auto& row : train(micro("ablation = no_vsgc\n")).trace) EXPECT_EQ(row.cl, 0.0);
  for (const auto& row : train(micro()).trace) EXPECT_GT(row.cl, 0.0);
}

TEST(Train, NoContrastiveVariantStillLogsTheTerm) {
  const auto r = train(micro("ablation = no_cl\n"));
  for (const auto& row : r.trace) {
    EXPECT_GT(row.cl, 0.0);
    EXPECT_NEAR(row.total, combine_loss(row.rec, row.syn, 0.0, LossWeights{}), 1e-5 * row.total);
  }
}

TEST(Train, PerceptualNetworkIsNeverUpdated) {
  const auto before = PerceptualNet().checksum();
  train(micro());
  EXPECT_EQ(PerceptualNet().checksum(), before);
}

TEST(Train, NonFiniteValuesAbortAfterFlushingTheTrace) {
  const auto d = temp_dir("nan");
  // The first step is sound; the huge update then overflows the forward pass.
  auto c = micro("max_steps = 6\nlr_init = 1e30\nlr_final = 1e29\n");
  c.out_dir = d.string();
  EXPECT_THROW(train(c), NumericError);
  const auto text = read_text(d / "trace.csv");
  EXPECT_EQ(text.rfind("step,lr,total,rec,syn,cl\n", 0), 0u);
  EXPECT_GE(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_FALSE(std::filesystem::exists(d / "checkpoint.sgck"));
}

TEST(Train, MicroRunOnOnePhantomReducesLoss) {
  const auto c = micro(
      "n_train = 1\nbatch_size = 1\nmax_steps = 200\nlr_init = 5e-4\nlr_final = 1e-5\n"
      "augment = false\nfixed_mask = true\n");
  const auto trace = train(c).trace;
  ASSERT_EQ(trace.size(), 200u);
  EXPECT_LT(trace.back().total, 0.25 * trace.front().total);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    EXPECT_LE(trace[i].total, 1.05 * trace[i - 1].total) << "step " << i;
  }
}

// ----------------------------------------------------------- baselines

TEST(Baselines, LinearRecoversLinearRamp) {
  auto v = ramp_volume(8, 4, 4);
  auto in = v;
  in.set_mask(std::vector<std::uint8_t>{1, 0, 0, 1, 1, 0, 1, 1});
  const auto out = impute_linear(in);
  for (std::size_t k = 0; k < v.data.size(); ++k) EXPECT_NEAR(out.data[k], v.data[k], 1e-6);
  const std::vector<std::size_t> miss = {1, 2, 5};
  EXPECT_EQ(volume_metrics(out, v, miss).psnr, kPsnrCapDb);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(out.slice_mask[i], 1);
}

TEST(Baselines, NearestCopiesClosestSlice) {
  auto c = Volume::complete(5, 2, 2, std::vector<float>(20, 0.3f));
  c.set_mask(std::vector<std::uint8_t>{0, 1, 0, 0, 1});
  EXPECT_EQ(volume_metrics(impute_nearest(c), Volume::complete(5, 2, 2, std::vector<float>(20, 0.3f)),
                           std::vector<std::size_t>{0, 2, 3})
                .mae,
            0.0);
  auto r = ramp_volume(6, 2, 2);
  r.set_mask(std::vector<std::uint8_t>{1, 0, 0, 1, 0, 0});
  const auto n = impute_nearest(r);
  EXPECT_EQ(n.slice(1)[0], r.slice(0)[0]);
  EXPECT_EQ(n.slice(2)[0], r.slice(3)[0]);
  EXPECT_EQ(n.slice(4)[0], r.slice(3)[0]);
  EXPECT_EQ(n.slice(5)[0], r.slice(3)[0]);
  // Equidistant: the lower slice wins.
  r.set_mask(std::vector<std::uint8_t>{1, 0, 1, 1, 1, 1});
  EXPECT_EQ(impute_nearest(r).slice(1)[0], r.slice(0)[0]);
}

// ------------------------------------------------------- impute / evaluate

TEST(Impute, PassthroughAndReplaceModes) {
  const auto c = micro();
  const Checkpoint ck{c.model, ModelParams<float>::init(c.model, 3)};
  auto v = test_volumes(c)[0];
  auto in = v;
  in.set_mask(std::vector<std::uint8_t>{1, 0, 1, 1, 0, 1});
  const auto pass = impute_normalized(ck, in, true);
  const auto all = impute_normalized(ck, in, false);
  for (std::size_t i = 0; i < 6; ++i) {
    const bool avail = i != 1 && i != 4;
    const bool same_as_input = std::equal(pass.slice(i).begin(), pass.slice(i).end(), v.slice(i).begin());
    EXPECT_EQ(same_as_input, avail) << i;
    EXPECT_TRUE(std::equal(pass.slice(1).begin(), pass.slice(1).end(), all.slice(1).begin()));
    if (avail) {
      EXPECT_FALSE(std::equal(all.slice(i).begin(), all.slice(i).end(), v.slice(i).begin()));
    }
  }
  auto raw = in;
  for (auto& x : raw.data) x = 100.0f + 50.0f * x;
  const auto back = impute(ck, raw, true);
  EXPECT_EQ(back.slice(0)[3], raw.slice(0)[3]);
  EXPECT_THROW(impute(ck, Volume::complete(4, 32, 32, std::vector<float>(4 * 1024, 0.f)), true), ConfigError);
}

TEST(Evaluate, ReproducibleReportWithBaselines) {
  const auto c = micro();
  const Checkpoint ck{c.model, ModelParams<float>::init(c.model, 3)};
  const auto vols = test_volumes(c);
  const auto dir = temp_dir("errors");
  const auto a = evaluate(ck, vols, 0.34, 7, dir);
  const auto b = evaluate(ck, vols, 0.34, 7);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_TRUE(std::filesystem::exists(dir / "error_000.sgcv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "error_001.sgcv"));
  const auto j = nlohmann::json::parse(a.to_json());
  ASSERT_EQ(j["volumes"].size(), 2u);
  EXPECT_EQ(j["volumes"][0]["model"][0]["scope"], "missing");
  EXPECT_EQ(j["volumes"][0]["model"][1]["scope"], "all");
  EXPECT_TRUE(j["mean"]["linear"][0].contains("psnr"));
  for (const auto& v : a.volumes) {
    EXPECT_EQ(std::count(v.mask.begin(), v.mask.end(), 0), 2);
    // Pass-through makes every method exact on available slices.
    EXPECT_GE(v.model.all.psnr, v.model.missing.psnr);
  }
  EXPECT_THROW(evaluate(ck, vols, 0.01, 7), ConfigError);
}
