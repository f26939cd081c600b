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

#include "planereg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "planereg/augmentation.hpp"
#include "planereg/checkpoint.hpp"
#include "planereg/error.hpp"
#include "planereg/fileutil.hpp"
#include "planereg/rng.hpp"
#include "planereg/volume_io.hpp"

namespace planereg {

// Targets live in normalized volume units, so a healthy loss stays far below this.
constexpr double kDivergedLoss = 1e6;

namespace {

std::vector<PlaneFrame> frames_of(const Sample& s, const std::vector<int>& which) {
  std::vector<PlaneFrame> out;
  out.reserve(which.size());
  for (int p : which) out.push_back(s.planes.at(p).frame);
  return out;
}

std::vector<std::vector<int>> plane_groups(const ExperimentConfig& cfg) {
  if (cfg.combined) {
    std::vector<int> all(cfg.n_planes());
    std::iota(all.begin(), all.end(), 0);
    return {all};
  }
  std::vector<std::vector<int>> groups;
  for (int p = 0; p < cfg.n_planes(); ++p) groups.push_back({p});
  return groups;
}

std::vector<std::string> default_plane_names(AnatomyMode mode) {
  std::vector<std::string> names;
  for (const auto& p : canonical_planes(mode, AnatomyParams{})) names.push_back(p.name);
  return names;
}

// Runs f(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
template <typename F>
void parallel_for(int n, int jobs, F f) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string fold_dir_name(int fold) { return "fold_" + std::to_string(fold); }

void write_loss_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& curves) {
  std::ostringstream out;
  out << "epoch";
  for (std::size_t n = 0; n < curves.size(); ++n) out << ",net" << n;
  out << '\n' << std::setprecision(9);
  const std::size_t epochs = curves.empty() ? 0 : curves[0].size();
  for (std::size_t e = 0; e < epochs; ++e) {
    out << e;
    for (const auto& c : curves) out << ',' << c[e];
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// Data

std::vector<Sample> load_samples(const std::filesystem::path& manifest) {
  std::vector<Sample> out;
  for (const auto& e : read_manifest(manifest)) {
    out.push_back(Sample{e.path.string(), e.patient_id, e.origin, read_volume(e.path),
                         read_planes(planes_path_for(e.path))});
  }
  if (out.empty()) throw ValidationError(manifest.string() + ": manifest lists no volumes");
  return out;
}

std::vector<Sample> samples_from_dataset(const Dataset& ds) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& e = ds.entries[i];
    out.push_back(Sample{e.name, e.patient_id, e.origin, ds.phantoms[i].volume, ds.phantoms[i].planes});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Folds

std::vector<int> FoldAssignment::members(int fold) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldAssignment::complement(int fold) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(static_cast<int>(i));
  return out;
}

FoldAssignment split_kfold_grouped(const std::vector<GroupKey>& volumes, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k-fold split needs k >= 2");
  std::map<int, OriginClass> patients;
  for (const auto& v : volumes) {
    auto [it, inserted] = patients.emplace(v.patient_id, v.origin);
    if (!inserted && it->second != v.origin)
      throw ValidationError("patient " + std::to_string(v.patient_id) + " has volumes of different origin classes");
  }
  if (static_cast<int>(patients.size()) < k)
    throw ValidationError("k-fold split needs at least k=" + std::to_string(k) + " patients, got " +
                          std::to_string(patients.size()));

  std::map<int, int> fold_of_patient;
  std::mt19937_64 rng(derive_seed(seed, "kfold"));
  int offset = 0;
  for (OriginClass c : {OriginClass::kMetal, OriginClass::kMetalOutside, OriginClass::kNoMetal}) {
    std::vector<int> ids;
    for (const auto& [id, origin] : patients)
      if (origin == c) ids.push_back(id);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (int id : ids) fold_of_patient[id] = offset++ % k;
  }

  FoldAssignment fa;
  fa.k = k;
  for (const auto& v : volumes) fa.fold_of.push_back(fold_of_patient.at(v.patient_id));
  return fa;
}

FoldAssignment split_kfold_grouped(const std::vector<ManifestEntry>& manifest, int k, std::uint64_t seed) {
  std::vector<GroupKey> keys;
  for (const auto& e : manifest) keys.push_back({e.patient_id, e.origin});
  return split_kfold_grouped(keys, k, seed);
}

FoldAssignment split_kfold_grouped(const std::vector<Sample>& samples, int k, std::uint64_t seed) {
  std::vector<GroupKey> keys;
  for (const auto& s : samples) keys.push_back({s.patient_id, s.origin});
  return split_kfold_grouped(keys, k, seed);
}

void check_partition(const std::vector<Sample>& samples, const std::vector<int>& train,
                     const std::vector<int>& test) {
  std::set<int> train_patients;
  std::set<std::string> train_ids;
  for (int i : train) {
    train_patients.insert(samples.at(i).patient_id);
    train_ids.insert(samples.at(i).id);
  }
  for (int i : test) {
    if (train_patients.count(samples.at(i).patient_id) || train_ids.count(samples.at(i).id))
      throw std::logic_error("test sample " + samples.at(i).id + " leaks into the training set");
  }
}

// ---------------------------------------------------------------------------
// Training

TrainedModel train(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                   const std::vector<int>& train_idx, const TrainLog& log) {
  cfg.validate();
  if (cfg.epochs > 0 && train_idx.empty()) throw ValidationError("train: empty training set");

  const NetworkConfig ncfg = cfg.network_config();
  const AugmentConfig aug = cfg.augment_config();
  const LossWeights weights = cfg.effective_weights();

  TrainedModel m;
  m.planes = plane_groups(cfg);
  m.plane_names = train_idx.empty() ? default_plane_names(cfg.mode) : std::vector<std::string>{};
  for (int i : train_idx) {
    if (static_cast<int>(samples.at(i).planes.size()) != cfg.n_planes())
      throw ValidationError("sample " + samples.at(i).id + " does not carry " +
                            std::to_string(cfg.n_planes()) + " planes");
  }
  if (!train_idx.empty())
    for (const auto& p : samples.at(train_idx.front()).planes) m.plane_names.push_back(p.name);
  m.kind = cfg.kind;
  m.grid = cfg.input_grid();
  m.window = cfg.window;

  for (std::size_t n = 0; n < m.planes.size(); ++n) {
    Network<float> net(ncfg);
    net.he_initialize(derive_seed(cfg.seed, "network", n));
    SgdMomentum<float> opt(static_cast<float>(cfg.momentum));
    const auto& group = m.planes[n];
    const int n_planes = static_cast<int>(group.size());
    std::vector<double> curve;

    std::vector<int> order = train_idx;
    std::vector<double> pred_d;
    std::vector<float> grad_f;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double lr = step_decay_lr(cfg.lr, cfg.lr_decay, cfg.lr_step, epoch);
      order = train_idx;
      std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle", epoch));
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      double epoch_loss = 0.0;
      const int n_batches = (static_cast<int>(order.size()) + cfg.batch_size - 1) / cfg.batch_size;
      for (int b = 0; b < n_batches; ++b) {
        const int lo = b * cfg.batch_size;
        const int hi = std::min<int>(lo + cfg.batch_size, order.size());
        net.zero_grad();
        for (int i = lo; i < hi; ++i) {
          const Sample& s = samples[order[i]];
          SeededRng rng(derive_seed(cfg.seed, "augment", epoch), order[i]);
          const auto frames = frames_of(s, group);
          const AugmentedSample a = augment_sample(s.volume, frames, aug, rng, cfg.kind);

          auto diverged = [&](const char* what) {
            std::ostringstream msg;
            msg << what << " at epoch " << epoch << ", batch " << b << " (sample " << s.id << "), lr " << lr;
            return NumericalError(msg.str());
          };
          std::vector<float> out;
          try {
            out = net.forward(a.input);
          } catch (const NumericalError&) {
            throw diverged("non-finite network output");
          }
          pred_d.assign(out.begin(), out.end());
          const LossResult loss =
              compute_loss(pred_d, a.target_vector, weights, cfg.kind, n_planes, cfg.ortho_form);
          if (!std::isfinite(loss.total)) throw diverged("non-finite loss");
          if (loss.total > kDivergedLoss) throw diverged("exploding loss");
          m.degenerate_pairs += loss.degenerate_pairs;
          epoch_loss += loss.total;
          grad_f.resize(loss.grad.size());
          const double scale = 1.0 / (hi - lo);
          for (std::size_t g = 0; g < grad_f.size(); ++g) grad_f[g] = static_cast<float>(loss.grad[g] * scale);
          net.backward(grad_f);
        }
        opt.step(net.parameters(), static_cast<float>(lr));
      }
      epoch_loss /= static_cast<double>(order.size());
      curve.push_back(epoch_loss);
      if (log.on_epoch) log.on_epoch(static_cast<int>(n), epoch, epoch_loss, lr);
    }
    m.networks.push_back(std::move(net));
    m.loss_curves.push_back(std::move(curve));
  }
  return m;
}

std::vector<std::filesystem::path> save_model(const TrainedModel& m, const ExperimentConfig& cfg,
                                              const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (std::size_t n = 0; n < m.networks.size(); ++n) {
    CheckpointMeta meta;
    meta.network = m.networks[n].config();
    meta.input_spacing = Vec3::Constant(cfg.spacing_mm);
    meta.window = cfg.window;
    for (int p : m.planes[n]) meta.plane_names.push_back(m.plane_names.at(p));
    const auto path = m.networks.size() == 1 ? dir / "model.ckpt"
                                             : dir / ("model_" + meta.plane_names.front() + ".ckpt");
    save_checkpoint(path, meta, m.networks[n]);
    paths.push_back(path);
  }
  return paths;
}

TrainedModel load_model(const std::vector<std::filesystem::path>& checkpoints) {
  if (checkpoints.empty()) throw ValidationError("no checkpoint given");
  TrainedModel m;
  for (std::size_t n = 0; n < checkpoints.size(); ++n) {
    const Checkpoint ck = read_checkpoint(checkpoints[n]);
    const GridSpec grid{ck.meta.network.input_dims, ck.meta.input_spacing};
    if (n == 0) {
      m.kind = ck.meta.network.kind;
      m.grid = grid;
      m.window = ck.meta.window;
    } else if (ck.meta.network.kind != m.kind || grid.dims != m.grid.dims ||
               grid.spacing != m.grid.spacing) {
      throw ValidationError(checkpoints[n].string() + ": input grid or representation differs from " +
                            checkpoints[0].string());
    }
    std::vector<int> group;
    for (const auto& name : ck.meta.plane_names) {
      auto it = std::find(m.plane_names.begin(), m.plane_names.end(), name);
      if (it != m.plane_names.end())
        throw ValidationError(checkpoints[n].string() + ": plane '" + name + "' predicted twice");
      group.push_back(static_cast<int>(m.plane_names.size()));
      m.plane_names.push_back(name);
    }
    m.planes.push_back(std::move(group));
    m.networks.push_back(load_network(ck));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Inference and evaluation

std::vector<float> prepare_input(const Volume& v, const GridSpec& grid, const WindowConfig& window) {
  const auto hu = resample_values(v, RigidTransform::identity(), grid);
  return intensity_pipeline(hu, 1.0, window);
}

std::vector<NamedPlane> predict_planes(const TrainedModel& m, const Volume& v, int* degenerate) {
  const std::vector<float> input = prepare_input(v, m.grid, m.window);
  const double extent = m.grid.extent_mm();
  const int stride = 3 + encoding_length(m.kind);
  std::vector<NamedPlane> out(m.plane_names.size());
  for (std::size_t n = 0; n < m.networks.size(); ++n) {
    const std::vector<float> y = m.networks[n].predict(input);
    for (std::size_t g = 0; g < m.planes[n].size(); ++g) {
      const float* v0 = y.data() + g * stride;
      const Vec3 center = denormalize_translation(Vec3(v0[0], v0[1], v0[2]), extent);
      RotationEncoding enc{m.kind, std::vector<double>(v0 + 3, v0 + stride)};
      RotMat3 r;
      try {
        r = decode_rotation(enc);
      } catch (const DegenerateEncodingError&) {
        r = RotMat3::Identity();
        if (degenerate) ++*degenerate;
      }
      const int p = m.planes[n][g];
      out[p] = NamedPlane{m.plane_names[p], rotation_to_frame(r, center)};
    }
  }
  return out;
}

EvalResult evaluate_predictions(const std::vector<std::vector<PlaneFrame>>& predicted,
                                const std::vector<std::vector<PlaneFrame>>& truth,
                                const std::vector<std::string>& plane_names) {
  if (predicted.size() != truth.size()) throw PreconditionError("evaluate: prediction/truth count mismatch");
  EvalResult r;
  for (std::size_t s = 0; s < predicted.size(); ++s) {
    if (predicted[s].size() != plane_names.size() || truth[s].size() != plane_names.size())
      throw PreconditionError("evaluate: plane count mismatch");
    std::vector<PlaneErrors> e;
    for (std::size_t p = 0; p < plane_names.size(); ++p) e.push_back(plane_errors(predicted[s][p], truth[s][p]));
    r.errors.push_back(std::move(e));
  }
  r.rows = aggregate_errors(r.errors, plane_names);
  return r;
}

EvalResult evaluate(const TrainedModel& m, const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                    const std::vector<int>& test_idx) {
  (void)cfg;
  if (test_idx.empty()) throw ValidationError("evaluate: empty test set");
  std::vector<std::vector<PlaneFrame>> pred, truth;
  int degenerate = 0;
  double seconds = 0.0;
  for (int i : test_idx) {
    const Sample& s = samples.at(i);
    if (s.planes.size() != m.plane_names.size())
      throw ValidationError("sample " + s.id + ": plane count does not match the model");
    const auto t0 = std::chrono::steady_clock::now();
    const auto planes = predict_planes(m, s.volume, &degenerate);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<PlaneFrame> p, t;
    for (std::size_t k = 0; k < planes.size(); ++k) {
      p.push_back(planes[k].frame);
      t.push_back(s.planes[k].frame);
    }
    pred.push_back(std::move(p));
    truth.push_back(std::move(t));
  }
  EvalResult r = evaluate_predictions(pred, truth, m.plane_names);
  r.mean_inference_s = seconds / test_idx.size();
  r.degenerate_predictions = degenerate;
  return r;
}

// ---------------------------------------------------------------------------
// Cross-validation

FoldResult run_fold(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                    const FoldAssignment& folds, int fold, const std::filesystem::path& dir) {
  const auto train_idx = folds.complement(fold);
  const auto test_idx = folds.members(fold);
  check_partition(samples, train_idx, test_idx);
  TrainedModel m = train(cfg, samples, train_idx);
  FoldResult r;
  r.fold = fold;
  r.eval = evaluate(m, cfg, samples, test_idx);
  r.loss_curves = m.loss_curves;
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    write_report_csv(dir / "report.csv", r.eval.rows);
    write_loss_csv(dir / "loss.csv", m.loss_curves);
    save_model(m, cfg, dir);
  }
  return r;
}

std::vector<SummaryRow> summarize_folds(const std::vector<std::vector<ReportRow>>& fold_rows) {
  if (fold_rows.empty()) throw PreconditionError("summarize_folds: no folds");
  const std::size_t n_rows = fold_rows[0].size();
  const double n = static_cast<double>(fold_rows.size());
  std::vector<SummaryRow> out(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    out[r].name = fold_rows[0][r].plane;
    for (int c = 0; c < 4; ++c) {
      std::vector<double> xs;
      for (const auto& f : fold_rows) {
        if (f.size() != n_rows) throw PreconditionError("summarize_folds: ragged reports");
        const ReportRow& row = f[r];
        const double v[4] = {row.d_mm, row.eps_n_deg, row.eps_i_deg, row.score};
        xs.push_back(v[c]);
      }
      const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      out[r].mean[c] = mean;
      out[r].std[c] = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows,
                       const std::string& first_column) {
  std::ostringstream out;
  out << first_column
      << ",d_mm_mean,d_mm_std,eps_n_deg_mean,eps_n_deg_std,eps_i_deg_mean,eps_i_deg_std,score_mean,score_std\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.name;
    for (int c = 0; c < 4; ++c) out << ',' << r.mean[c] << ',' << r.std[c];
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<FoldResult> cross_validate(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                                       const std::filesystem::path& dir, int jobs,
                                       const std::vector<int>& only_folds) {
  cfg.validate();
  const FoldAssignment folds = split_kfold_grouped(samples, cfg.k, cfg.seed);
  std::vector<int> which = only_folds;
  if (which.empty())
    for (int f = 0; f < cfg.k; ++f) which.push_back(f);
  for (int f : which)
    if (f < 0 || f >= cfg.k) throw ValidationError("fold " + std::to_string(f) + " out of range");

  std::vector<FoldResult> results(which.size());
  parallel_for(static_cast<int>(which.size()), jobs, [&](int i) {
    results[i] = run_fold(cfg, samples, folds, which[i], dir.empty() ? dir : dir / fold_dir_name(which[i]));
  });
  if (!dir.empty()) {
    std::vector<std::vector<ReportRow>> rows;
    for (const auto& r : results) rows.push_back(r.eval.rows);
    write_summary_csv(dir / "summary.csv", summarize_folds(rows));
  }
  return results;
}

// ---------------------------------------------------------------------------
// Searches

Hyperparams draw_hyperparams(const SearchSpace& space, std::uint64_t seed, int trial) {
  space.validate();
  std::mt19937_64 g(derive_seed(seed, "hyperparams", trial));
  Hyperparams h;
  h.lr = std::exp(uniform(g, std::log(space.lr_lo), std::log(space.lr_hi)));
  h.lr_decay = uniform(g, space.decay_lo, space.decay_hi);
  h.lr_step = std::uniform_int_distribution<int>(space.step_lo, space.step_hi)(g);
  h.momentum = uniform(g, space.momentum_lo, space.momentum_hi);
  h.batch_size = std::uniform_int_distribution<int>(space.batch_lo, space.batch_hi)(g);
  return h;
}

SearchSplit search_split(const ExperimentConfig& cfg, const std::vector<Sample>& samples) {
  const FoldAssignment folds = split_kfold_grouped(samples, cfg.k, cfg.seed);
  const auto pool = folds.complement(cfg.fold);
  std::vector<int> patients;
  for (int i : pool) patients.push_back(samples[i].patient_id);
  std::sort(patients.begin(), patients.end());
  patients.erase(std::unique(patients.begin(), patients.end()), patients.end());
  if (patients.size() < 2) throw ValidationError("search: need at least two training patients");
  std::mt19937_64 rng(derive_seed(cfg.seed, "search-split"));
  std::shuffle(patients.begin(), patients.end(), rng);
  const std::size_t n_val = std::max<std::size_t>(1, (patients.size() + 3) / 4);
  const std::set<int> val(patients.begin(), patients.begin() + n_val);
  SearchSplit s;
  for (int i : pool) (val.count(samples[i].patient_id) ? s.validation : s.train).push_back(i);
  return s;
}

namespace {

double validation_score(const ExperimentConfig& cfg, const std::vector<Sample>& samples, const SearchSplit& split) {
  const TrainedModel m = train(cfg, samples, split.train);
  return evaluate(m, cfg, samples, split.validation).rows.back().score;
}

int argmin(const std::vector<Trial>& trials) {
  int best = 0;
  for (std::size_t i = 1; i < trials.size(); ++i)
    if (trials[i].score < trials[best].score) best = static_cast<int>(i);
  return best;
}

}  // namespace

SearchResult hyperparam_search(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                               int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw ValidationError("search: n_trials must be >= 1");
  const SearchSplit split = search_split(cfg, samples);
  SearchResult r;
  for (int t = 0; t < n_trials; ++t) {
    const Hyperparams h = draw_hyperparams(cfg.search, seed, t);
    ExperimentConfig c = cfg;
    c.lr = h.lr;
    c.lr_decay = h.lr_decay;
    c.lr_step = h.lr_step;
    c.momentum = h.momentum;
    c.batch_size = h.batch_size;
    r.trials.push_back(Trial{h, c.effective_weights(), validation_score(c, samples, split)});
  }
  r.best = argmin(r.trials);
  return r;
}

std::vector<LossWeights> weight_grid(double step, bool combined) {
  const double steps = 0.8 / step;
  const int n = static_cast<int>(std::lround(steps));
  if (!(step > 0) || std::abs(steps - n) > 1e-9) throw ValidationError("grid step must divide 0.8 evenly");
  // Work in integer hundredths so sums compare exactly.
  const int du = static_cast<int>(std::lround(step * 100.0));
  if (std::abs(step * 100.0 - du) > 1e-9) throw ValidationError("grid step must be a multiple of 0.01");
  auto value = [](int units) { return units / 100.0; };
  std::vector<LossWeights> out;
  for (int i = 0; i <= n; ++i) {
    const int a = 10 + i * du;
    if (!combined) {
      out.push_back({value(a), value(100 - a), 0.0});
      continue;
    }
    for (int j = 0; j <= n; ++j) {
      const int b = 10 + j * du;
      if (a + b <= 100) out.push_back({value(a), value(b), value(100 - a - b)});
    }
  }
  return out;
}

SearchResult weight_grid_search(const ExperimentConfig& cfg, const std::vector<Sample>& samples) {
  const SearchSplit split = search_split(cfg, samples);
  SearchResult r;
  for (const LossWeights& w : weight_grid(cfg.grid_step, cfg.combined)) {
    ExperimentConfig c = cfg;
    c.loss_preset.clear();
    c.weights = w;
    const Hyperparams h{c.lr, c.lr_decay, c.lr_step, c.momentum, c.batch_size};
    r.trials.push_back(Trial{h, w, validation_score(c, samples, split)});
  }
  r.best = argmin(r.trials);
  return r;
}

// ---------------------------------------------------------------------------
// Ablations

std::vector<AblationVariant> ablation_variants(const std::string& which, const ExperimentConfig& base) {
  std::vector<AblationVariant> out;
  if (which == "representation") {
    for (RotationKind k : {RotationKind::kQuaternion, RotationKind::kEulerSinCos, RotationKind::kSixD}) {
      ExperimentConfig c = base;
      c.kind = k;
      out.push_back({std::string(to_string(k)), c});
    }
  } else if (which == "resolution") {
    const std::pair<int, double> rows[] = {{64, 2.5}, {72, 2.2}, {128, 1.2}};
    for (const auto& [n, sp] : rows) {
      ExperimentConfig c = base;
      c.dims = {n, n, n};
      c.spacing_mm = sp;
      std::ostringstream name;
      name << n << "_" << sp;
      out.push_back({name.str(), c});
    }
  } else if (which == "combined_vs_separate") {
    ExperimentConfig three = base;
    three.combined = false;
    ExperimentConfig comb = base;
    comb.combined = true;
    comb.loss_preset.clear();
    comb.weights = {0.5, 0.5, 0.0};
    ExperimentConfig opt = base;
    opt.combined = true;
    out = {{"three", three}, {"comb", comb}, {"opt_comb", opt}};
  } else {
    throw ValidationError("unknown ablation '" + which +
                          "' (expected representation, resolution or combined_vs_separate)");
  }
  return out;
}

AblationResult ablation_driver(const std::string& which, const ExperimentConfig& base,
                               const std::vector<Sample>& samples, const std::filesystem::path& dir,
                               int jobs, const std::vector<int>& only_folds) {
  AblationResult r;
  r.variants = ablation_variants(which, base);
  for (const auto& v : r.variants) v.cfg.validate();
  const FoldAssignment folds = split_kfold_grouped(samples, base.k, base.seed);
  std::vector<int> which_folds = only_folds;
  if (which_folds.empty())
    for (int f = 0; f < base.k; ++f) which_folds.push_back(f);

  const int nv = static_cast<int>(r.variants.size());
  const int nf = static_cast<int>(which_folds.size());
  r.folds.assign(nv, std::vector<FoldResult>(nf));
  parallel_for(nv * nf, jobs, [&](int job) {
    const int v = job / nf, f = job % nf;
    const auto sub = dir.empty() ? dir : dir / r.variants[v].name / fold_dir_name(which_folds[f]);
    r.folds[v][f] = run_fold(r.variants[v].cfg, samples, folds, which_folds[f], sub);
  });

  for (int v = 0; v < nv; ++v) {
    std::vector<std::vector<ReportRow>> mean_rows, all_rows;
    for (const auto& fr : r.folds[v]) {
      mean_rows.push_back({fr.eval.rows.back()});
      all_rows.push_back(fr.eval.rows);
    }
    SummaryRow row = summarize_folds(mean_rows).front();
    row.name = r.variants[v].name;
    r.rows.push_back(row);
    if (!dir.empty()) write_summary_csv(dir / r.variants[v].name / "summary.csv", summarize_folds(all_rows));
  }
  if (!dir.empty()) write_summary_csv(dir / "summary.csv", r.rows, "variant");
  return r;
}

}  // namespace planereg
