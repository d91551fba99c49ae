// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry points: phantom generation, training, evaluation,
// single-volume imputation and gradient checks.
//
// Exit codes: 0 success, 1 failed check or unexpected error, 2 configuration
// or input error, 3 numeric failure during training.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "sagc/errors.hpp"
#include "sagc/gradcheck_suite.hpp"
#include "sagc/trainer.hpp"

namespace fs = std::filesystem;
using namespace sagc;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct PhantomArgs {
  std::size_t n = 4;
  std::size_t slices = 12;
  std::size_t size = 32;
  std::uint64_t seed = 0;
  std::string out;
};

int gen_phantoms(const PhantomArgs& a) {
  TrainConfig cfg;
  cfg.n_train = a.n;
  cfg.n_test = 0;
  cfg.n_slices = a.slices;
  cfg.model.height = cfg.model.width = a.size;
  cfg.seed = a.seed;
  fs::create_directories(a.out);
  const auto vols = training_volumes(cfg);
  for (std::size_t i = 0; i < vols.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "phantom_%03zu.sgcv", i);
    save_volume(fs::path(a.out) / name, vols[i]);
  }
  std::printf("wrote %zu volumes to %s\n", vols.size(), a.out.c_str());
  return 0;
}

int run_train(const std::string& config_path, const std::string& out_override) {
  auto cfg = TrainConfig::load(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (cfg.out_dir.empty()) cfg.out_dir = ".";
  const auto result = train(cfg);
  const auto& last = result.trace.back();
  std::printf("steps %zu  final total %.6g (rec %.6g, syn %.6g, cl %.6g)\n", result.trace.size(), last.total,
              last.rec, last.syn, last.cl);
  std::printf("checkpoint %s\n", (fs::path(cfg.out_dir) / "checkpoint.sgck").string().c_str());
  return 0;
}

struct EvalArgs {
  std::string ckpt, data, out, error_dir;
  double eta = 0.25;
  std::uint64_t seed = 0;
};

void print_method(const char* name, const MethodMetrics& m) {
  std::printf("%-8s missing: mae %.4f psnr %.2f ssim %.4f | all: mae %.4f psnr %.2f ssim %.4f\n", name,
              m.missing.mae, m.missing.psnr, m.missing.ssim, m.all.mae, m.all.psnr, m.all.ssim);
}

int run_eval(const EvalArgs& a) {
  const auto ck = load_checkpoint(a.ckpt);
  const auto vols = load_volume_dir(a.data);
  if (vols.empty()) throw ConfigError("eval: no .sgcv volumes in " + a.data);
  fs::path error_dir = a.error_dir;
  if (error_dir.empty()) error_dir = fs::path(a.out).parent_path() / "error_maps";
  fs::create_directories(error_dir);
  const auto report = evaluate(ck, vols, a.eta, a.seed, error_dir);
  if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream(a.out) << report.to_json() << "\n";
  print_method("model", report.mean_model);
  print_method("nearest", report.mean_nearest);
  print_method("linear", report.mean_linear);
  return 0;
}

struct ImputeArgs {
  std::string ckpt, in, mask, out;
  bool passthrough = true;
};

int run_impute(const ImputeArgs& a) {
  const auto ck = load_checkpoint(a.ckpt);
  auto v = load_volume(a.in);
  const auto mask = load_mask(a.mask);
  if (mask.size() != v.depth) {
    throw ConfigError("impute: mask has " + std::to_string(mask.size()) + " slices, volume has " +
                      std::to_string(v.depth));
  }
  v.slice_mask = mask;
  save_volume(a.out, impute(ck, v, a.passthrough));
  std::printf("wrote %s (%s mode)\n", a.out.c_str(), a.passthrough ? "passthrough" : "all");
  return 0;
}

int run_gradcheck(const std::string& module, std::size_t seeds) {
  const auto records = run_gradcheck_suite(module, seeds);
  bool ok = true;
  for (const auto& r : records) {
    std::printf("%-4s %-10s %-24s seeds %3zu skipped %2zu  f64 %.2e  f32 %.2e\n", r.passed() ? "ok" : "FAIL",
                r.module.c_str(), r.name.c_str(), r.seeds, r.skipped, r.err_f64, r.err_f32);
    ok = ok && r.passed();
  }
  std::printf("%zu checks, %s (tolerance f64 %.0e, f32 %.0e)\n", records.size(), ok ? "all passed" : "FAILED",
              kGradTolF64, kGradTolF32);
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slice imputation for volumetric scans"};
  app.require_subcommand(1);

  PhantomArgs ph;
  auto* gen = app.add_subcommand("gen-phantoms", "Write synthetic volumes as .sgcv files");
  gen->add_option("--n", ph.n, "Number of volumes")->check(CLI::PositiveNumber);
  gen->add_option("--slices", ph.slices, "Slices per volume")->check(CLI::PositiveNumber);
  gen->add_option("--size", ph.size, "In-plane height and width")->check(CLI::PositiveNumber);
  gen->add_option("--seed", ph.seed, "Generator seed");
  gen->add_option("--out", ph.out, "Output directory")->required();

  std::string config_path, train_out;
  auto* tr = app.add_subcommand("train", "Train a model from a key=value config file");
  tr->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", train_out, "Output directory (overrides out_dir)");

  EvalArgs ev;
  auto* evc = app.add_subcommand("eval", "Score a checkpoint and the baselines on stored volumes");
  evc->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  evc->add_option("--data", ev.data, "Directory of .sgcv volumes")->required()->check(CLI::ExistingDirectory);
  evc->add_option("--eta", ev.eta, "Missing rate");
  evc->add_option("--seed", ev.seed, "Mask seed");
  evc->add_option("--out", ev.out, "Metrics JSON path")->required();
  evc->add_option("--error-dir", ev.error_dir, "Error-map directory (default: error_maps next to --out)");

  ImputeArgs im;
  auto* imc = app.add_subcommand("impute", "Fill the missing slices of one volume");
  imc->add_option("--ckpt", im.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  imc->add_option("--in", im.in, "Input .sgcv volume")->required()->check(CLI::ExistingFile);
  imc->add_option("--mask", im.mask, "Availability .sgcm mask")->required()->check(CLI::ExistingFile);
  imc->add_option("--out", im.out, "Output .sgcv volume")->required();
  imc->add_flag("--passthrough,!--all", im.passthrough,
                "Copy available slices from the input (default); --all takes every slice from the network");

  std::string module = "all";
  std::size_t seeds = 20;
  auto* gc = app.add_subcommand("gradcheck", "Compare reverse-mode gradients with finite differences");
  gc->add_option("--module", module, "all, primitives, vsa, vsgc or backbone");
  gc->add_option("--seeds", seeds, "Random configurations per check")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return gen_phantoms(ph);
    if (*tr) return run_train(config_path, train_out);
    if (*evc) return run_eval(ev);
    if (*imc) return run_impute(im);
    if (*gc) return run_gradcheck(module, seeds);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
