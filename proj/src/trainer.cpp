// SPDX-License-Identifier: Apache-2.0
#include "sagc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sagc/errors.hpp"
#include "sagc/ops.hpp"

namespace sagc {

// ------------------------------------------------------------------ config

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  auto fail = [](const std::string& m) { throw ConfigError("train: " + m); };
  if (!(eta >= 0.0 && eta < 1.0)) fail("eta must lie in [0, 1), got " + format_real(eta));
  if (!(lr_init > 0.0) || !(lr_final > 0.0) || !(lr_final < lr_init)) {
    fail("learning rates need 0 < lr_final < lr_init");
  }
  if (!(grad_clip >= 0.0)) fail("grad_clip must be non-negative");
  if (batch_size == 0) fail("batch_size must be positive");
  if (epochs == 0 && max_steps == 0) fail("epochs or max_steps must be positive");
  if (data_dir.empty()) {
    if (n_train == 0) fail("n_train must be positive");
    if (n_slices < 2 || n_slices > model.max_slices) {
      fail("n_slices must lie in [2, max_slices = " + std::to_string(model.max_slices) + "]");
    }
    if (missing_count(n_slices, eta) >= n_slices) fail("eta leaves no available slice");
  }
}

std::size_t TrainConfig::steps_per_epoch() const { return (n_train + batch_size - 1) / batch_size; }

std::size_t TrainConfig::total_steps() const { return max_steps ? max_steps : epochs * steps_per_epoch(); }

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  for (const auto& e : parse_config_text(text)) {
    const std::string& k = e.key;
    if (c.model.apply(e)) continue;
    if (k == "size") c.model.height = c.model.width = config_size(e);
    else if (k == "epochs") c.epochs = config_size(e);
    else if (k == "batch_size") c.batch_size = config_size(e);
    else if (k == "max_steps") c.max_steps = config_size(e);
    else if (k == "lr_init") c.lr_init = config_real(e);
    else if (k == "lr_final") c.lr_final = config_real(e);
    else if (k == "grad_clip") c.grad_clip = config_real(e);
    else if (k == "eta") c.eta = config_real(e);
    else if (k == "seed") c.seed = config_u64(e);
    else if (k == "n_train") c.n_train = config_size(e);
    else if (k == "n_test") c.n_test = config_size(e);
    else if (k == "n_slices") c.n_slices = config_size(e);
    else if (k == "phantom_blobs") c.phantom_blobs = config_size(e);
    else if (k == "phantom_smoothness") c.phantom_smoothness = config_real(e);
    else if (k == "augment") c.augment = config_bool(e);
    else if (k == "fixed_mask") c.fixed_mask = config_bool(e);
    else if (k == "data_dir") c.data_dir = e.value;
    else if (k == "out_dir") c.out_dir = e.value;
    else if (k == "lambda_rec") c.loss.lambda_rec = config_real(e);
    else if (k == "lambda_syn") c.loss.lambda_syn = config_real(e);
    else if (k == "lambda_cl") c.loss.lambda_cl = config_real(e);
    else if (k == "perceptual_weight") c.loss.perceptual_weight = config_real(e);
    else if (k == "no_vsa") c.model.ablation.no_vsa = config_bool(e);
    else if (k == "no_vsgc") c.model.ablation.no_vsgc = config_bool(e);
    else if (k == "no_attribute_view") c.model.ablation.no_attribute_view = config_bool(e);
    else if (k == "no_structure_view") c.model.ablation.no_structure_view = config_bool(e);
    else if (k == "no_cl") c.model.ablation.no_cl = config_bool(e);
    else config_fail(e, "unknown key");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// --------------------------------------------------------------- optimizer

double cosine_lr(std::size_t step, std::size_t total_steps, double lr_init, double lr_final) {
  if (total_steps == 0 || step > total_steps) throw ContractError("cosine_lr: step outside [0, total_steps]");
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + std::cos(std::numbers::pi * t));
}

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<std::vector<T>>& grads,
               const std::vector<std::string>& names, AdamState& state, double lr) {
  if (grads.size() != params.size() || names.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and name counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].numel()) throw ShapeError("adam_step: gradient shape differs for " + names[i]);
    for (T g : grads[i]) {
      if (!std::isfinite(static_cast<double>(g))) throw NumericError("non-finite gradient in parameter " + names[i]);
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto d = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double g = static_cast<double>(grads[i][k]);
      m[k] = AdamState::kBeta1 * m[k] + (1.0 - AdamState::kBeta1) * g;
      v[k] = AdamState::kBeta2 * v[k] + (1.0 - AdamState::kBeta2) * g * g;
      const double mhat = m[k] / c1, vhat = v[k] / c2;
      d[k] = static_cast<T>(static_cast<double>(d[k]) - lr * mhat / (std::sqrt(vhat) + AdamState::kEps));
    }
  }
}

template <typename T>
double clip_global_norm(std::vector<std::vector<T>>& grads, double max_norm) {
  double sq = 0;
  for (const auto& g : grads)
    for (T x : g) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (T& x : g) x = static_cast<T>(static_cast<double>(x) * s);
  }
  return norm;
}

// ------------------------------------------------------------------- trace

std::string trace_csv_header() { return "step,lr,total,rec,syn,cl\n"; }

std::string trace_csv_row(const TraceRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step, r.lr, r.total, r.rec, r.syn, r.cl);
  return buf;
}

namespace {

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << trace_csv_header();
  for (const auto& r : rows) out << trace_csv_row(r);
}

Volume phantom(const TrainConfig& cfg, std::uint64_t index) {
  PhantomParams p;
  p.n_slices = cfg.n_slices;
  p.height = cfg.model.height;
  p.width = cfg.model.width;
  p.n_blobs = cfg.phantom_blobs;
  p.smoothness = cfg.phantom_smoothness;
  p.seed = derive_seed(cfg.seed, index, 0x70686e74ULL);
  return phantom_generate(p);
}

void check_fits(const BackboneConfig& m, const Volume& v) {
  if (v.height != m.height || v.width != m.width || v.depth > m.max_slices || v.n_slices() < 2) {
    throw ConfigError("volume " + std::to_string(v.depth) + "x" + std::to_string(v.height) + "x" +
                      std::to_string(v.width) + " does not fit the model (" + std::to_string(m.height) + "x" +
                      std::to_string(m.width) + ", at most " + std::to_string(m.max_slices) + " slices)");
  }
}

Tensor<float> as_tensor(const Volume& v) { return Tensor<float>({v.depth, v.height, v.width}, v.data); }

}  // namespace

std::vector<Volume> training_volumes(const TrainConfig& cfg) {
  if (!cfg.data_dir.empty()) return load_volume_dir(cfg.data_dir);
  std::vector<Volume> out;
  for (std::size_t i = 0; i < cfg.n_train; ++i) out.push_back(phantom(cfg, i));
  return out;
}

std::vector<Volume> test_volumes(const TrainConfig& cfg) {
  std::vector<Volume> out;
  for (std::size_t i = 0; i < cfg.n_test; ++i) out.push_back(phantom(cfg, cfg.n_train + i));
  return out;
}

// ---------------------------------------------------------------- training

TrainResult train(const TrainConfig& cfg) { return train(cfg, training_volumes(cfg)); }

TrainResult train(const TrainConfig& cfg, const std::vector<Volume>& volumes) {
  cfg.validate();
  if (volumes.empty()) throw ConfigError("train: no training volumes");
  for (const auto& v : volumes) check_fits(cfg.model, v);

  TrainResult result;
  result.params = ModelParams<float>::init(cfg.model, derive_seed(cfg.seed, 0x6d6f64656cULL));
  auto tensors = result.params.tensors();
  const auto names = result.params.names();
  const PerceptualNet net;
  LossWeights weights = cfg.loss;
  if (cfg.model.ablation.no_cl) weights.lambda_cl = 0.0;

  const std::filesystem::path out_dir = cfg.out_dir;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  auto flush_trace = [&] {
    if (!out_dir.empty()) write_trace(out_dir / "trace.csv", result.trace);
  };

  const std::size_t n = volumes.size();
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = cfg.total_steps();
  AdamState adam;
  std::vector<std::size_t> order(n);

  try {
    for (std::size_t step = 0; step < total; ++step) {
      const std::size_t epoch = step / per_epoch, pos = step % per_epoch;
      if (pos == 0) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(derive_seed(cfg.seed, epoch, 0x73687566ULL));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);
      }
      const std::size_t first = pos * cfg.batch_size, last = std::min(n, first + cfg.batch_size);

      // Inputs and targets of the batch, padded to a common depth.
      std::vector<Volume> inputs, targets;
      std::size_t depth = 0;
      for (std::size_t b = first; b < last; ++b) {
        const std::size_t vi = order[b];
        Volume gt = volumes[vi];
        if (cfg.augment) {
          Rng rng(derive_seed(cfg.seed, vi, epoch, 0x61756704ULL));
          gt = augment(gt, rng);
        }
        Rng mask_rng(derive_seed(cfg.seed, vi, cfg.fixed_mask ? 0 : epoch, 0x6d61736bULL));
        Volume in = gt;
        in.set_mask(sample_missing_mask(gt.n_slices(), cfg.eta, mask_rng));
        depth = std::max(depth, gt.depth);
        inputs.push_back(std::move(in));
        targets.push_back(std::move(gt));
      }

      const double lr = cosine_lr(step, total, cfg.lr_init, cfg.lr_final);
      auto bound = result.params.bind();
      TraceRow row{step, lr, 0, 0, 0, 0};
      const float inv = 1.0f / static_cast<float>(inputs.size());
      for (std::size_t b = 0; b < inputs.size(); ++b) {
        const Volume in = zero_pad(inputs[b], depth);
        const Volume gt = zero_pad(targets[b], depth);
        auto fwd = model_forward(cfg.model, bound, in);
        auto terms = total_loss(fwd.output, as_tensor(gt), in.available_indices(), in.missing_indices(),
                                fwd.cl_losses, net, weights);
        const double value = terms.total.item();
        if (!std::isfinite(value)) throw NumericError("non-finite loss at step " + std::to_string(step));
        row.total += value / static_cast<double>(inputs.size());
        row.rec += terms.rec.item() / static_cast<double>(inputs.size());
        row.syn += terms.syn.item() / static_cast<double>(inputs.size());
        row.cl += terms.cl.item() / static_cast<double>(inputs.size());
        ops::scale(terms.total, inv).backward();
      }
      result.trace.push_back(row);

      std::vector<std::vector<float>> grads;
      for (const auto& t : bound.tensors()) {
        auto g = t.grad();
        if (g.empty()) g.assign(t.numel(), 0.0f);
        grads.push_back(std::move(g));
      }
      for (std::size_t i = 0; i < grads.size(); ++i)
        for (float g : grads[i])
          if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter " + names[i]);
      clip_global_norm(grads, cfg.grad_clip);
      adam_step(tensors, grads, names, adam, lr);
    }
  } catch (const NumericError&) {
    flush_trace();
    throw;
  }
  flush_trace();
  if (!out_dir.empty()) save_checkpoint((out_dir / "checkpoint.sgck").string(), cfg.model, result.params);
  return result;
}

// --------------------------------------------------------------- baselines

namespace {

// Nearest available slice at or below / above i among non-pad slices.
std::pair<long, long> neighbours(const Volume& v, std::size_t i) {
  long lo = static_cast<long>(i), hi = static_cast<long>(i);
  while (lo >= 0 && !v.slice_mask[static_cast<std::size_t>(lo)]) --lo;
  const long n = static_cast<long>(v.n_slices());
  while (hi < n && !v.slice_mask[static_cast<std::size_t>(hi)]) ++hi;
  return {lo, hi < n ? hi : -1};
}

Volume filled(const Volume& v) {
  if (v.n_available() == 0) throw ContractError("imputation needs at least one available slice");
  Volume out = v;
  for (std::size_t i = 0; i < v.depth; ++i) out.slice_mask[i] = v.pad_mask[i] ? 0 : 1;
  return out;
}

}  // namespace

Volume impute_nearest(const Volume& v) {
  Volume out = filled(v);
  for (auto i : v.missing_indices()) {
    const auto [lo, hi] = neighbours(v, i);
    long src = lo;
    if (lo < 0 || (hi >= 0 && hi - static_cast<long>(i) < static_cast<long>(i) - lo)) src = hi;
    const auto s = v.slice(static_cast<std::size_t>(src));
    std::copy(s.begin(), s.end(), out.slice(i).begin());
  }
  return out;
}

Volume impute_linear(const Volume& v) {
  Volume out = filled(v);
  for (auto i : v.missing_indices()) {
    const auto [lo, hi] = neighbours(v, i);
    auto dst = out.slice(i);
    if (lo < 0 || hi < 0) {
      const auto s = v.slice(static_cast<std::size_t>(lo < 0 ? hi : lo));
      std::copy(s.begin(), s.end(), dst.begin());
      continue;
    }
    const double t = static_cast<double>(static_cast<long>(i) - lo) / static_cast<double>(hi - lo);
    const auto a = v.slice(static_cast<std::size_t>(lo)), b = v.slice(static_cast<std::size_t>(hi));
    for (std::size_t k = 0; k < dst.size(); ++k) {
      dst[k] = static_cast<float>((1.0 - t) * static_cast<double>(a[k]) + t * static_cast<double>(b[k]));
    }
  }
  return out;
}

// --------------------------------------------------------------- inference

Volume impute_normalized(const Checkpoint& ck, const Volume& v, bool passthrough) {
  check_fits(ck.config, v);
  if (v.n_available() == 0) throw ContractError("imputation needs at least one available slice");
  const auto y = model_forward(ck.config, ck.params, v).output;
  Volume out = filled(v);
  for (std::size_t i = 0; i < v.depth; ++i) {
    auto dst = out.slice(i);
    if (v.pad_mask[i]) {
      std::fill(dst.begin(), dst.end(), 0.0f);
    } else if (!(passthrough && v.slice_mask[i])) {
      std::copy_n(y.data().begin() + static_cast<std::ptrdiff_t>(i * v.slice_size()), v.slice_size(), dst.begin());
    }
  }
  return out;
}

Volume impute(const Checkpoint& ck, const Volume& v, bool passthrough) {
  check_fits(ck.config, v);
  std::vector<double> avail;
  for (auto i : v.available_indices())
    for (float x : v.slice(i)) avail.push_back(x);
  if (avail.empty()) throw ContractError("imputation needs at least one available slice");
  const auto range = minmax_normalize(avail).range;
  const double span = range.max - range.min;
  Volume norm = v;
  for (auto& x : norm.data) x = static_cast<float>(2.0 * (static_cast<double>(x) - range.min) / span - 1.0);
  Volume out = impute_normalized(ck, norm, false);
  for (std::size_t i = 0; i < v.depth; ++i) {
    auto dst = out.slice(i);
    if (v.pad_mask[i]) continue;
    if (passthrough && v.slice_mask[i]) {
      std::copy(v.slice(i).begin(), v.slice(i).end(), dst.begin());
    } else {
      for (auto& x : dst) x = static_cast<float>((static_cast<double>(x) + 1.0) * 0.5 * span + range.min);
    }
  }
  return out;
}

// -------------------------------------------------------------- evaluation

namespace {

MethodMetrics score(const Volume& pred, const Volume& target, const Volume& input) {
  const auto missing = input.missing_indices();
  const auto real = input.real_indices();
  return {volume_metrics(pred, target, missing), volume_metrics(pred, target, real)};
}

void accumulate(MethodMetrics& acc, const MethodMetrics& m, double w) {
  for (auto [a, b] : {std::pair{&acc.missing, &m.missing}, std::pair{&acc.all, &m.all}}) {
    a->mae += w * b->mae;
    a->psnr += w * b->psnr;
    a->ssim += w * b->ssim;
  }
}

nlohmann::json metrics_json(const MethodMetrics& m) {
  auto one = [](const QualityMetrics& q, const char* scope) {
    return nlohmann::json{{"mae", q.mae}, {"psnr", q.psnr}, {"ssim", q.ssim}, {"scope", scope}};
  };
  return nlohmann::json::array({one(m.missing, "missing"), one(m.all, "all")});
}

}  // namespace

EvalReport evaluate(const Checkpoint& ck, const std::vector<Volume>& volumes, double eta, std::uint64_t seed,
                    const std::filesystem::path& error_dir) {
  if (volumes.empty()) throw ConfigError("evaluate: no volumes");
  if (!error_dir.empty()) std::filesystem::create_directories(error_dir);
  EvalReport rep;
  rep.eta = eta;
  rep.seed = seed;
  const double w = 1.0 / static_cast<double>(volumes.size());
  for (std::size_t idx = 0; idx < volumes.size(); ++idx) {
    const Volume& target = volumes[idx];
    check_fits(ck.config, target);
    if (missing_count(target.n_slices(), eta) == 0) {
      throw ConfigError("evaluate: eta " + format_real(eta) + " leaves no missing slice in " +
                        std::to_string(target.n_slices()) + " slices");
    }
    Rng rng(derive_seed(seed, idx, 0, 0x6576616cULL));
    Volume input = target;
    VolumeReport r;
    r.index = idx;
    r.mask = sample_missing_mask(target.n_slices(), eta, rng);
    input.set_mask(r.mask);
    const Volume pred = impute_normalized(ck, input, true);
    r.model = score(pred, target, input);
    r.nearest = score(impute_nearest(input), target, input);
    r.linear = score(impute_linear(input), target, input);
    accumulate(rep.mean_model, r.model, w);
    accumulate(rep.mean_nearest, r.nearest, w);
    accumulate(rep.mean_linear, r.linear, w);
    if (!error_dir.empty()) {
      Volume err = pred;
      for (std::size_t k = 0; k < err.data.size(); ++k) err.data[k] = std::abs(pred.data[k] - target.data[k]);
      char name[32];
      std::snprintf(name, sizeof name, "error_%03zu.sgcv", idx);
      save_volume(error_dir / name, err);
    }
    rep.volumes.push_back(std::move(r));
  }
  return rep;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["eta"] = eta;
  j["seed"] = seed;
  j["volumes"] = nlohmann::json::array();
  for (const auto& v : volumes) {
    j["volumes"].push_back({{"index", v.index},
                            {"mask", v.mask},
                            {"model", metrics_json(v.model)},
                            {"nearest", metrics_json(v.nearest)},
                            {"linear", metrics_json(v.linear)}});
  }
  j["mean"] = {{"model", metrics_json(mean_model)},
               {"nearest", metrics_json(mean_nearest)},
               {"linear", metrics_json(mean_linear)}};
  return j.dump(2) + "\n";
}

std::vector<Volume> load_volume_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".sgcv") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Volume> out;
  for (const auto& p : paths) out.push_back(load_volume(p));
  if (out.empty()) throw ConfigError("no .sgcv volumes in " + dir.string());
  return out;
}

template void adam_step(std::vector<Tensor<float>>&, const std::vector<std::vector<float>>&,
                        const std::vector<std::string>&, AdamState&, double);
template void adam_step(std::vector<Tensor<double>>&, const std::vector<std::vector<double>>&,
                        const std::vector<std::string>&, AdamState&, double);
template double clip_global_norm(std::vector<std::vector<float>>&, double);
template double clip_global_norm(std::vector<std::vector<double>>&, double);

}  // namespace sagc
