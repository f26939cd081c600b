// Copyright 2026 The planereg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// planereg: phantom generation, training, evaluation, ablations, inference
// and MPR export from one entry point.
//
// Exit codes: 0 success, 1 validation error (bad config, missing or malformed
// input), 2 runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "planereg/config.hpp"
#include "planereg/error.hpp"
#include "planereg/fileutil.hpp"
#include "planereg/harness.hpp"
#include "planereg/kernels.hpp"
#include "planereg/phantom.hpp"
#include "planereg/plane_io.hpp"
#include "planereg/volume_io.hpp"

namespace fs = std::filesystem;
using namespace planereg;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::string keys_footer() {
  std::ostringstream s;
  s << "Config keys (set in --config files as `key = value`, or with --set key=value):\n";
  for (const auto& k : config_keys()) s << "  " << k.name << "\n      " << k.description << "\n";
  return s.str();
}

void add_common(CLI::App* sub, Common& c, const std::string& default_out) {
  c.out = default_out;
  sub->add_option("--config", c.config, "config file (key = value lines)");
  sub->add_option("--set", c.sets, "override one config key, key=value (repeatable)");
  sub->add_option("--seed", c.seed, "master seed (overrides the seed key)");
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->footer(keys_footer());
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  for (const auto& s : c.sets) apply_override(cfg, s);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::string invocation_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

fs::path manifest_of(const ExperimentConfig& cfg, const std::string& flag) {
  const std::string m = flag.empty() ? cfg.manifest : flag;
  if (m.empty()) throw ValidationError("no dataset: pass --manifest or set data.manifest");
  return m;
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
  return v;
}

void print_rows(const std::vector<ReportRow>& rows) {
  write_report_csv(std::cout, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planereg: standard plane regression for 3D volumes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "planereg 0.1.0");
  std::string isa;
  app.add_option("--isa", isa, "force kernel instruction set: scalar or avx2");

  Common gen_c, train_c, eval_c, xval_c, ablate_c, infer_c, mpr_c;

  auto* gen = app.add_subcommand("phantom-gen", "generate synthetic phantom volumes, plane labels and a manifest");
  add_common(gen, gen_c, "phantoms");
  std::optional<int> gen_n, gen_per_patient;
  std::string gen_mode;
  gen->add_option("--n", gen_n, "total number of volumes (phantom.n_volumes)");
  gen->add_option("--per-patient", gen_per_patient, "volumes per patient (phantom.per_patient)");
  gen->add_option("--mode", gen_mode, "ankle or calcaneus (mode)");

  auto* tr = app.add_subcommand("train", "train on the training part of cv.fold (or all data)");
  add_common(tr, train_c, "runs/train");
  std::string tr_manifest, tr_search;
  bool tr_all = false;
  tr->add_option("--manifest", tr_manifest, "dataset manifest (data.manifest)");
  tr->add_flag("--all-data", tr_all, "train on every volume instead of the fold's training part");
  tr->add_option("--search", tr_search, "run a search first and train with the winner: hyper or weights")
      ->check(CLI::IsMember({"hyper", "weights"}));

  auto* ev = app.add_subcommand("eval", "evaluate checkpoints on the test part of cv.fold (or all data)");
  add_common(ev, eval_c, "runs/eval");
  std::string ev_manifest;
  std::vector<std::string> ev_ckpt;
  bool ev_all = false;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file(s); one per network")->required();
  ev->add_option("--manifest", ev_manifest, "dataset manifest (data.manifest)");
  ev->add_flag("--all-data", ev_all, "evaluate every volume in the manifest");

  auto* xv = app.add_subcommand("xval", "grouped k-fold cross-validation");
  add_common(xv, xval_c, "results/xval");
  std::string xv_manifest;
  int xv_jobs = 1;
  std::vector<int> xv_folds;
  xv->add_option("--manifest", xv_manifest, "dataset manifest (data.manifest)");
  xv->add_option("--jobs", xv_jobs, "folds run in parallel")->check(CLI::PositiveNumber);
  xv->add_option("--folds", xv_folds, "run only these folds");

  auto* ab = app.add_subcommand("ablate", "cross-validated ablation over one axis");
  add_common(ab, ablate_c, "results/ablate");
  std::string ab_manifest, ab_which;
  int ab_jobs = 1;
  std::vector<int> ab_folds;
  ab->add_option("--manifest", ab_manifest, "dataset manifest (data.manifest)");
  ab->add_option("--which", ab_which, "representation, resolution or combined_vs_separate (ablation.which)");
  ab->add_option("--jobs", ab_jobs, "cells run in parallel")->check(CLI::PositiveNumber);
  ab->add_option("--folds", ab_folds, "run only these folds");

  auto* inf = app.add_subcommand("infer", "predict standard planes for one volume");
  add_common(inf, infer_c, "runs/infer");
  std::vector<std::string> inf_ckpt;
  std::string inf_volume;
  inf->add_option("--checkpoint", inf_ckpt, "checkpoint file(s); one per network")->required();
  inf->add_option("--volume", inf_volume, "volume header (.vhdr) or stem")->required();

  auto* mpr = app.add_subcommand("mpr-export", "write one PGM slice per plane");
  add_common(mpr, mpr_c, "runs/mpr");
  std::string mpr_volume, mpr_planes;
  int mpr_size = 256;
  std::optional<double> mpr_px;
  mpr->add_option("--volume", mpr_volume, "volume header (.vhdr) or stem")->required();
  mpr->add_option("--planes", mpr_planes, "plane annotation file")->required();
  mpr->add_option("--size", mpr_size, "image width and height in pixels")->check(CLI::Range(2, 8192));
  mpr->add_option("--pixel-mm", mpr_px, "pixel spacing (default: largest volume extent / size)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string invocation = invocation_line(argc, argv);
  try {
    if (!isa.empty()) {
      if (isa == "scalar") kernels::force_isa(kernels::Isa::kScalar);
      else if (isa == "avx2") kernels::force_isa(kernels::Isa::kAvx2);
      else throw ValidationError("--isa must be scalar or avx2");
    }

    if (gen->parsed()) {
      ExperimentConfig cfg = resolve(gen_c);
      if (gen_n) cfg.phantom_n_volumes = *gen_n;
      if (gen_per_patient) cfg.phantom_per_patient = *gen_per_patient;
      if (!gen_mode.empty()) cfg.mode = parse_anatomy_mode(gen_mode);
      cfg.validate();
      DatasetRequest req;
      req.n_patients = cfg.phantom_n_volumes / cfg.phantom_per_patient;
      req.volumes_per_patient = cfg.phantom_per_patient;
      req.mode = cfg.mode;
      req.seed = cfg.seed;
      req.dims = cfg.phantom_dims;
      req.spacing = Vec3::Constant(cfg.phantom_spacing_mm);
      req.class_proportions = cfg.phantom_proportions;
      const Dataset ds = generate_dataset(req);
      const fs::path manifest = write_dataset(ds, gen_c.out);
      write_run_lock(gen_c.out, cfg, invocation);
      std::cout << "wrote " << ds.entries.size() << " volumes, manifest " << manifest.string() << "\n";
      return 0;
    }

    if (tr->parsed()) {
      ExperimentConfig cfg = resolve(train_c);
      if (!tr_manifest.empty()) cfg.manifest = tr_manifest;
      cfg.validate();
      const auto samples = load_samples(manifest_of(cfg, tr_manifest));
      fs::create_directories(train_c.out);
      if (!tr_search.empty()) {
        const SearchResult s = tr_search == "hyper"
                                   ? hyperparam_search(cfg, samples, cfg.search_trials, cfg.seed)
                                   : weight_grid_search(cfg, samples);
        std::ostringstream csv;
        csv << "trial,lr,lr_decay,lr_step,momentum,batch_size,alpha,beta,gamma,score\n";
        for (std::size_t t = 0; t < s.trials.size(); ++t) {
          const auto& tr_ = s.trials[t];
          csv << t << ',' << tr_.params.lr << ',' << tr_.params.lr_decay << ',' << tr_.params.lr_step << ','
              << tr_.params.momentum << ',' << tr_.params.batch_size << ',' << tr_.weights.alpha << ','
              << tr_.weights.beta << ',' << tr_.weights.gamma << ',' << tr_.score << '\n';
        }
        write_file_atomic(fs::path(train_c.out) / "search.csv", csv.str());
        const Trial& best = s.trials[s.best];
        cfg.lr = best.params.lr;
        cfg.lr_decay = best.params.lr_decay;
        cfg.lr_step = best.params.lr_step;
        cfg.momentum = best.params.momentum;
        cfg.batch_size = best.params.batch_size;
        cfg.loss_preset.clear();
        cfg.weights = best.weights;
        std::cout << "search winner: trial " << s.best << " score " << best.score << "\n";
      }
      write_run_lock(train_c.out, cfg, invocation);
      const auto idx = tr_all ? all_indices(samples.size())
                              : split_kfold_grouped(samples, cfg.k, cfg.seed).complement(cfg.fold);
      TrainLog log;
      log.on_epoch = [](int net, int epoch, double loss, double lr) {
        std::fprintf(stderr, "net %d epoch %d loss %.6f lr %.3g\n", net, epoch, loss, lr);
      };
      const TrainedModel m = train(cfg, samples, idx, log);
      for (const auto& p : save_model(m, cfg, train_c.out)) std::cout << "checkpoint " << p.string() << "\n";
      return 0;
    }

    if (ev->parsed()) {
      ExperimentConfig cfg = resolve(eval_c);
      if (!ev_manifest.empty()) cfg.manifest = ev_manifest;
      cfg.validate();
      std::vector<fs::path> ck(ev_ckpt.begin(), ev_ckpt.end());
      const TrainedModel m = load_model(ck);
      const auto samples = load_samples(manifest_of(cfg, ev_manifest));
      const auto idx = ev_all ? all_indices(samples.size())
                              : split_kfold_grouped(samples, cfg.k, cfg.seed).members(cfg.fold);
      const EvalResult r = evaluate(m, cfg, samples, idx);
      fs::create_directories(eval_c.out);
      write_run_lock(eval_c.out, cfg, invocation);
      write_report_csv(fs::path(eval_c.out) / "report.csv", r.rows);
      print_rows(r.rows);
      std::cerr << "mean inference time " << r.mean_inference_s << " s per volume\n";
      return 0;
    }

    if (xv->parsed()) {
      ExperimentConfig cfg = resolve(xval_c);
      if (!xv_manifest.empty()) cfg.manifest = xv_manifest;
      cfg.validate();
      const auto samples = load_samples(manifest_of(cfg, xv_manifest));
      fs::create_directories(xval_c.out);
      write_run_lock(xval_c.out, cfg, invocation);
      const auto res = cross_validate(cfg, samples, xval_c.out, xv_jobs, xv_folds);
      for (const auto& r : res) {
        std::cout << "fold " << r.fold << "\n";
        print_rows(r.eval.rows);
      }
      return 0;
    }

    if (ab->parsed()) {
      ExperimentConfig cfg = resolve(ablate_c);
      if (!ab_manifest.empty()) cfg.manifest = ab_manifest;
      if (!ab_which.empty()) set_config_value(cfg, "ablation.which", ab_which);
      cfg.validate();
      const auto samples = load_samples(manifest_of(cfg, ab_manifest));
      fs::create_directories(ablate_c.out);
      write_run_lock(ablate_c.out, cfg, invocation);
      const AblationResult r = ablation_driver(cfg.ablation, cfg, samples, ablate_c.out, ab_jobs, ab_folds);
      std::cout << "variant,score_mean,score_std\n";
      for (const auto& row : r.rows) std::cout << row.name << ',' << row.mean[3] << ',' << row.std[3] << "\n";
      if (cfg.ablation == "representation") {
        const double q = r.rows[0].mean[3], six = r.rows[2].mean[3];
        std::cout << "trend sixd <= quaternion: " << (six <= q ? "yes" : "no") << " (" << six << " vs " << q
                  << ")\n";
      }
      return 0;
    }

    if (inf->parsed()) {
      ExperimentConfig cfg = resolve(infer_c);
      std::vector<fs::path> ck(inf_ckpt.begin(), inf_ckpt.end());
      const TrainedModel m = load_model(ck);
      const Volume v = read_volume(inf_volume);
      const auto t0 = std::chrono::steady_clock::now();
      int degenerate = 0;
      const auto planes = predict_planes(m, v, &degenerate);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      fs::create_directories(infer_c.out);
      write_run_lock(infer_c.out, cfg, invocation);
      fs::path stem = fs::path(inf_volume).filename();
      stem.replace_extension();
      const fs::path out = fs::path(infer_c.out) / (stem.string() + ".planes");
      write_planes(out, planes);
      std::cout << out.string() << "\n";
      std::cerr << "inference " << secs << " s";
      if (degenerate) std::cerr << ", " << degenerate << " degenerate rotation output(s)";
      std::cerr << "\n";
      return 0;
    }

    if (mpr->parsed()) {
      ExperimentConfig cfg = resolve(mpr_c);
      cfg.window.validate();
      const Volume v = read_volume(mpr_volume);
      const auto planes = read_planes(mpr_planes);
      const double px = mpr_px ? *mpr_px : v.extent().maxCoeff() / mpr_size;
      if (!(px > 0)) throw ValidationError("--pixel-mm must be positive");
      fs::create_directories(mpr_c.out);
      write_run_lock(mpr_c.out, cfg, invocation);
      for (const auto& p : planes) {
        const fs::path out = fs::path(mpr_c.out) / (p.name + ".pgm");
        write_pgm(out, extract_mpr_slice(v, p.frame, mpr_size, mpr_size, px, cfg.window));
        std::cout << out.string() << "\n";
      }
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
