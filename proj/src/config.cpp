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

#include "planereg/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "planereg/error.hpp"
#include "planereg/fileutil.hpp"

namespace planereg {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expect) {
  throw ValidationError("invalid value '" + std::string(value) + "' for key '" + std::string(key) +
                        "' (expected " + std::string(expect) + ")");
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) bad_value(key, v, "a number");
  return x;
}

long long to_int(std::string_view key, std::string_view v) {
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string_view> split_commas(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = v.find(',');
    out.push_back(trim(v.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    v.remove_prefix(pos + 1);
  }
  return out;
}

std::vector<int> to_int_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  for (auto t : split_commas(v)) out.push_back(static_cast<int>(to_int(key, t)));
  return out;
}

Dims to_dims(std::string_view key, std::string_view v) {
  const auto parts = to_int_list(key, v);
  if (parts.size() == 1) return {parts[0], parts[0], parts[0]};
  if (parts.size() == 3) return {parts[0], parts[1], parts[2]};
  bad_value(key, v, "n or nx,ny,nz");
}

std::string fmt(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string fmt_list(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

std::string fmt_dims(const Dims& d) {
  if (d[0] == d[1] && d[1] == d[2]) return std::to_string(d[0]);
  return std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]);
}

struct KeyDef {
  ConfigKey key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define PLANEREG_DOUBLE_KEY(name, field, desc)                                                \
  KeyDef {                                                                                    \
    {name, desc}, [](ExperimentConfig& c, std::string_view v) { c.field = to_double(name, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.field); }                                 \
  }
#define PLANEREG_INT_KEY(name, field, desc)                                                       \
  KeyDef {                                                                                        \
    {name, desc},                                                                                 \
        [](ExperimentConfig& c, std::string_view v) { c.field = static_cast<int>(to_int(name, v)); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                          \
  }

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {{"mode", "anatomy: ankle (axial, coronal, sagittal) or calcaneus (axial, semicoronal, sagittal)"},
       [](ExperimentConfig& c, std::string_view v) { c.mode = parse_anatomy_mode(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.mode)); }},
      {{"representation", "rotation encoding: quaternion, euler or sixd"},
       [](ExperimentConfig& c, std::string_view v) { c.kind = parse_rotation_kind(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.kind)); }},
      {{"input.dims", "network input grid, n or nx,ny,nz voxels"},
       [](ExperimentConfig& c, std::string_view v) { c.dims = to_dims("input.dims", v); },
       [](const ExperimentConfig& c) { return fmt_dims(c.dims); }},
      PLANEREG_DOUBLE_KEY("input.spacing_mm", spacing_mm, "network input voxel size (isotropic)"),
      {{"network.combined", "true: one network for all planes; false: one network per plane"},
       [](ExperimentConfig& c, std::string_view v) { c.combined = to_bool("network.combined", v); },
       [](const ExperimentConfig& c) { return std::string(c.combined ? "true" : "false"); }},
      {{"network.channels", "output channels of each conv block"},
       [](ExperimentConfig& c, std::string_view v) { c.channels = to_int_list("network.channels", v); },
       [](const ExperimentConfig& c) { return fmt_list(c.channels); }},
      {{"network.fc_widths", "hidden fully connected widths (may be empty)"},
       [](ExperimentConfig& c, std::string_view v) { c.fc_widths = to_int_list("network.fc_widths", v); },
       [](const ExperimentConfig& c) { return fmt_list(c.fc_widths); }},
      {{"loss.preset", "named weight preset, e.g. ankle.opt_comb; sets loss.alpha/beta/gamma"},
       [](ExperimentConfig& c, std::string_view v) {
         c.loss_preset = std::string(v);
         if (!v.empty()) c.weights = LossWeights::preset(v);
       },
       [](const ExperimentConfig& c) { return c.loss_preset; }},
      PLANEREG_DOUBLE_KEY("loss.alpha", weights.alpha, "rotation loss weight"),
      PLANEREG_DOUBLE_KEY("loss.beta", weights.beta, "translation loss weight"),
      PLANEREG_DOUBLE_KEY("loss.gamma", weights.gamma, "orthogonality loss weight"),
      {{"loss.ortho_form", "orthogonality term: cross (1 - |n_i x n_j|) or dot (|n_i . n_j|)"},
       [](ExperimentConfig& c, std::string_view v) { c.ortho_form = parse_ortho_form(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.ortho_form)); }},
      PLANEREG_INT_KEY("train.epochs", epochs, "training epochs"),
      PLANEREG_DOUBLE_KEY("train.lr", lr, "initial learning rate"),
      PLANEREG_DOUBLE_KEY("train.lr_decay", lr_decay, "learning rate factor applied every lr_step epochs"),
      PLANEREG_INT_KEY("train.lr_step", lr_step, "epochs between learning rate decays"),
      PLANEREG_DOUBLE_KEY("train.momentum", momentum, "SGD momentum"),
      PLANEREG_INT_KEY("train.batch_size", batch_size, "mini-batch size"),
      PLANEREG_INT_KEY("cv.k", k, "number of cross-validation folds"),
      PLANEREG_INT_KEY("cv.fold", fold, "fold used by train/eval and the searches"),
      {{"seed", "master seed; every random draw derives from it"},
       [](ExperimentConfig& c, std::string_view v) {
         const auto x = to_int("seed", v);
         if (x < 0) bad_value("seed", v, "a non-negative integer");
         c.seed = static_cast<std::uint64_t>(x);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      PLANEREG_DOUBLE_KEY("aug.rot_deg", aug_rot_deg, "max rotation per axis, degrees"),
      PLANEREG_DOUBLE_KEY("aug.scale_lo", aug_scale_lo, "lower isotropic scale bound"),
      PLANEREG_DOUBLE_KEY("aug.scale_hi", aug_scale_hi, "upper isotropic scale bound"),
      PLANEREG_DOUBLE_KEY("aug.trans_mm", aug_trans_mm, "max translation per axis, mm"),
      PLANEREG_DOUBLE_KEY("aug.mirror_prob", aug_mirror_prob, "probability of mirroring along x"),
      PLANEREG_DOUBLE_KEY("aug.intensity_lo", aug_intensity_lo, "lower intensity jitter factor"),
      PLANEREG_DOUBLE_KEY("aug.intensity_hi", aug_intensity_hi, "upper intensity jitter factor"),
      PLANEREG_DOUBLE_KEY("window.clip_lo", window.clip_lo, "lower HU clip"),
      PLANEREG_DOUBLE_KEY("window.clip_hi", window.clip_hi, "upper HU clip"),
      PLANEREG_DOUBLE_KEY("window.gain", window.gain, "sigmoid window gain"),
      {{"data.manifest", "dataset manifest written by phantom-gen"},
       [](ExperimentConfig& c, std::string_view v) { c.manifest = std::string(v); },
       [](const ExperimentConfig& c) { return c.manifest; }},
      PLANEREG_INT_KEY("phantom.n_volumes", phantom_n_volumes, "total volumes generated by phantom-gen"),
      PLANEREG_INT_KEY("phantom.per_patient", phantom_per_patient, "volumes per synthetic patient"),
      {{"phantom.dims", "phantom volume grid, n or nx,ny,nz voxels"},
       [](ExperimentConfig& c, std::string_view v) { c.phantom_dims = to_dims("phantom.dims", v); },
       [](const ExperimentConfig& c) { return fmt_dims(c.phantom_dims); }},
      PLANEREG_DOUBLE_KEY("phantom.spacing_mm", phantom_spacing_mm, "phantom voxel size (isotropic)"),
      {{"phantom.proportions", "patient share of metal, metal_outside, no_metal"},
       [](ExperimentConfig& c, std::string_view v) {
         const auto parts = split_commas(v);
         if (parts.size() != 3) bad_value("phantom.proportions", v, "three comma-separated numbers");
         for (int i = 0; i < 3; ++i) c.phantom_proportions[i] = to_double("phantom.proportions", parts[i]);
       },
       [](const ExperimentConfig& c) {
         return fmt(c.phantom_proportions[0]) + "," + fmt(c.phantom_proportions[1]) + "," +
                fmt(c.phantom_proportions[2]);
       }},
      PLANEREG_INT_KEY("search.trials", search_trials, "random search trials"),
      PLANEREG_DOUBLE_KEY("search.lr_lo", search.lr_lo, "learning rate lower bound (log-uniform)"),
      PLANEREG_DOUBLE_KEY("search.lr_hi", search.lr_hi, "learning rate upper bound"),
      PLANEREG_DOUBLE_KEY("search.decay_lo", search.decay_lo, "decay factor lower bound"),
      PLANEREG_DOUBLE_KEY("search.decay_hi", search.decay_hi, "decay factor upper bound"),
      PLANEREG_INT_KEY("search.step_lo", search.step_lo, "decay step lower bound, epochs"),
      PLANEREG_INT_KEY("search.step_hi", search.step_hi, "decay step upper bound, epochs"),
      PLANEREG_DOUBLE_KEY("search.momentum_lo", search.momentum_lo, "momentum lower bound"),
      PLANEREG_DOUBLE_KEY("search.momentum_hi", search.momentum_hi, "momentum upper bound"),
      PLANEREG_INT_KEY("search.batch_lo", search.batch_lo, "batch size lower bound"),
      PLANEREG_INT_KEY("search.batch_hi", search.batch_hi, "batch size upper bound"),
      PLANEREG_DOUBLE_KEY("grid.step", grid_step, "loss weight grid step"),
      {{"ablation.which", "ablation axis: representation, resolution or combined_vs_separate"},
       [](ExperimentConfig& c, std::string_view v) {
         if (v != "representation" && v != "resolution" && v != "combined_vs_separate")
           bad_value("ablation.which", v, "representation, resolution or combined_vs_separate");
         c.ablation = std::string(v);
       },
       [](const ExperimentConfig& c) { return c.ablation; }},
  };
  return defs;
}

#undef PLANEREG_DOUBLE_KEY
#undef PLANEREG_INT_KEY

const KeyDef& find_key(std::string_view key) {
  for (const auto& d : key_defs())
    if (d.key.name == key) return d;
  throw ValidationError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void SearchSpace::validate() const {
  if (!(lr_lo > 0 && lr_lo <= lr_hi)) throw ValidationError("search: need 0 < lr_lo <= lr_hi");
  if (!(decay_lo > 0 && decay_lo <= decay_hi && decay_hi <= 1))
    throw ValidationError("search: need 0 < decay_lo <= decay_hi <= 1");
  if (!(step_lo >= 1 && step_lo <= step_hi)) throw ValidationError("search: need 1 <= step_lo <= step_hi");
  if (!(momentum_lo >= 0 && momentum_lo <= momentum_hi && momentum_hi < 1))
    throw ValidationError("search: need 0 <= momentum_lo <= momentum_hi < 1");
  if (!(batch_lo >= 1 && batch_lo <= batch_hi)) throw ValidationError("search: need 1 <= batch_lo <= batch_hi");
}

GridSpec ExperimentConfig::input_grid() const { return GridSpec{dims, Vec3::Constant(spacing_mm)}; }

AugmentConfig ExperimentConfig::augment_config() const {
  AugmentConfig a;
  a.rot_deg = aug_rot_deg;
  a.scale_lo = aug_scale_lo;
  a.scale_hi = aug_scale_hi;
  a.trans_mm = aug_trans_mm;
  a.mirror_prob = aug_mirror_prob;
  a.intensity_lo = aug_intensity_lo;
  a.intensity_hi = aug_intensity_hi;
  a.out = input_grid();
  a.window = window;
  return a;
}

NetworkConfig ExperimentConfig::network_config() const {
  NetworkConfig n;
  n.input_dims = dims;
  n.channels = channels;
  n.fc_widths = fc_widths;
  n.kind = kind;
  n.n_planes = n_planes();
  n.combined = combined;
  return n;
}

LossWeights ExperimentConfig::effective_weights() const {
  if (combined) return weights;
  return LossWeights{weights.alpha, 1.0 - weights.alpha, 0.0};
}

void ExperimentConfig::validate() const {
  if (!(spacing_mm > 0)) throw ValidationError("input.spacing_mm must be positive");
  if (!(phantom_spacing_mm > 0)) throw ValidationError("phantom.spacing_mm must be positive");
  for (int d : phantom_dims)
    if (d < 2) throw ValidationError("phantom.dims must be at least 2");
  try {
    weights.validate();
    effective_weights().validate();
    network_config().validate();
    augment_config().validate();
  } catch (const PreconditionError& e) {
    throw ValidationError(e.what());
  }
  if (epochs < 0) throw ValidationError("train.epochs must be >= 0");
  if (!(lr > 0)) throw ValidationError("train.lr must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ValidationError("train.lr_decay must be in (0, 1]");
  if (lr_step < 1) throw ValidationError("train.lr_step must be >= 1");
  if (!(momentum >= 0 && momentum < 1)) throw ValidationError("train.momentum must be in [0, 1)");
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (k < 2) throw ValidationError("cv.k must be >= 2");
  if (fold < 0 || fold >= k) throw ValidationError("cv.fold must be in [0, cv.k)");
  if (phantom_n_volumes < 1 || phantom_per_patient < 1 || phantom_n_volumes % phantom_per_patient != 0)
    throw ValidationError("phantom.n_volumes must be a positive multiple of phantom.per_patient");
  double psum = 0;
  for (double p : phantom_proportions) {
    if (p < 0) throw ValidationError("phantom.proportions must be non-negative");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-9) throw ValidationError("phantom.proportions must sum to 1");
  search.validate();
  if (search_trials < 1) throw ValidationError("search.trials must be >= 1");
  const double steps = 0.8 / grid_step;
  if (!(grid_step > 0) || std::abs(steps - std::round(steps)) > 1e-9)
    throw ValidationError("grid.step must divide 0.8 evenly");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& d : key_defs()) out.push_back(d.key);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  find_key(key).set(cfg, trim(value));
}

std::string get_config_value(const ExperimentConfig& cfg, std::string_view key) {
  return find_key(key).get(cfg);
}

void apply_config_text(ExperimentConfig& cfg, std::string_view text, const std::string& source) {
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ValidationError(where + "expected key = value");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ValidationError(where + e.what());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  apply_config_text(cfg, read_file(path), path.string());
  return cfg;
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ValidationError("--set expects key=value, got '" + std::string(assignment) + "'");
  try {
    set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
  } catch (const std::exception& e) {
    throw ValidationError(std::string("--set: ") + e.what());
  }
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& d : key_defs()) {
    out += d.key.name + " = " + d.get(cfg) + "\n";
  }
  return out;
}

void write_run_lock(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                    const std::string& invocation) {
  write_file_atomic(dir / "run.lock", "# " + invocation + "\n" + dump_config(cfg));
}

}  // namespace planereg
