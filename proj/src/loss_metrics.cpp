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

#include "planereg/loss_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "planereg/fileutil.hpp"

namespace planereg {
namespace {

using Deriv = Eigen::Matrix<double, 12, 1>;
using AD = Eigen::AutoDiffScalar<Deriv>;

const std::map<std::string, LossWeights, std::less<>>& presets() {
  static const std::map<std::string, LossWeights, std::less<>> table = {
      {"calcaneus.three.axial", {0.2, 0.8, 0.0}},
      {"calcaneus.three.coronal", {0.2, 0.8, 0.0}},
      {"calcaneus.three.semicoronal", {0.2, 0.8, 0.0}},
      {"calcaneus.three.sagittal", {0.6, 0.4, 0.0}},
      {"calcaneus.comb", {0.5, 0.5, 0.0}},
      {"calcaneus.opt_comb", {0.6, 0.3, 0.1}},
      {"ankle.three.axial", {0.6, 0.4, 0.0}},
      {"ankle.three.coronal", {0.2, 0.8, 0.0}},
      {"ankle.three.sagittal", {0.8, 0.2, 0.0}},
      {"ankle.comb", {0.5, 0.5, 0.0}},
      {"ankle.opt_comb", {0.2, 0.8, 0.0}},
  };
  return table;
}

// Adds d||v||/dv * scale to grad; the subgradient at v = 0 is taken as 0.
double norm_with_grad(const double* diff, int n, double scale, double* grad) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += diff[i] * diff[i];
  const double norm = std::sqrt(s);
  if (norm > 0.0)
    for (int i = 0; i < n; ++i) grad[i] += scale * diff[i] / norm;
  return norm;
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0))
    throw PreconditionError("loss weights must be non-negative");
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
    throw PreconditionError("loss weights must sum to 1");
}

LossWeights LossWeights::preset(std::string_view name) {
  const auto& t = presets();
  auto it = t.find(name);
  if (it == t.end()) throw ValidationError("unknown loss weight preset '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> LossWeights::preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : presets()) names.push_back(k);
  return names;
}

OrthoForm parse_ortho_form(std::string_view s) {
  if (s == "cross") return OrthoForm::kOneMinusCross;
  if (s == "dot") return OrthoForm::kAbsDot;
  throw ValidationError("unknown orthogonality form '" + std::string(s) + "' (expected cross or dot)");
}

std::string_view to_string(OrthoForm f) { return f == OrthoForm::kAbsDot ? "dot" : "cross"; }

LossResult compute_loss(std::span<const double> pred, std::span<const double> target,
                        const LossWeights& w, RotationKind kind, int n_planes, OrthoForm form) {
  const int enc = encoding_length(kind);
  const int stride = 3 + enc;
  if (n_planes < 1 || pred.size() != target.size() ||
      static_cast<int>(pred.size()) != n_planes * stride)
    throw PreconditionError("loss: prediction/target length does not match the output layout");

  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  std::vector<double> diff(stride);
  for (int p = 0; p < n_planes; ++p) {
    const int off = p * stride;
    for (int i = 0; i < stride; ++i) diff[i] = pred[off + i] - target[off + i];
    r.translation += norm_with_grad(diff.data(), 3, w.beta / n_planes, r.grad.data() + off) / n_planes;
    r.rotation +=
        norm_with_grad(diff.data() + 3, enc, w.alpha / n_planes, r.grad.data() + off + 3) / n_planes;
  }

  const int n_pairs = n_planes * (n_planes - 1) / 2;
  if (n_pairs > 0) {
    for (int i = 0; i < n_planes; ++i) {
      for (int j = i + 1; j < n_planes; ++j) {
        AD vi[6], vj[6];
        for (int k = 0; k < enc; ++k) {
          vi[k] = AD(pred[i * stride + 3 + k], 12, k);
          vj[k] = AD(pred[j * stride + 3 + k], 12, 6 + k);
        }
        AD term;
        try {
          const Eigen::Matrix<AD, 3, 1> ni = decode_rotation_t<AD>(kind, vi).col(2);
          const Eigen::Matrix<AD, 3, 1> nj = decode_rotation_t<AD>(kind, vj).col(2);
          if (form == OrthoForm::kOneMinusCross) {
            const Eigen::Matrix<AD, 3, 1> c = ni.cross(nj);
            const AD c2 = c.dot(c);
            if (c2.value() > 1e-24) {
              term = AD(1.0) - sqrt(c2);
            } else {
              ++r.degenerate_pairs;
              term = AD(1.0 - std::sqrt(c2.value()), Deriv::Zero());
            }
          } else {
            const AD d = ni.dot(nj);
            term = d.value() >= 0.0 ? d : -d;
          }
        } catch (const DegenerateEncodingError&) {
          ++r.degenerate_pairs;
          term = AD(1.0, Deriv::Zero());
        }
        r.orthogonality += term.value() / n_pairs;
        if (term.derivatives().size() == 12) {
          const double s = w.gamma / n_pairs;
          for (int k = 0; k < enc; ++k) {
            r.grad[i * stride + 3 + k] += s * term.derivatives()[k];
            r.grad[j * stride + 3 + k] += s * term.derivatives()[6 + k];
          }
        }
      }
    }
  }
  r.total = w.alpha * r.rotation + w.beta * r.translation + w.gamma * r.orthogonality;
  return r;
}

PlaneErrors plane_errors(const PlaneFrame& pred, const PlaneFrame& gt) {
  const Vec3 n_gt = gt.normal().normalized();
  PlaneErrors e;
  e.d_mm = std::abs((pred.center - gt.center).dot(n_gt));
  e.eps_n_deg = angle_deg(pred.normal(), gt.normal());
  e.eps_i_deg = 0.5 * (angle_deg(pred.e_u, gt.e_u) + angle_deg(pred.e_v, gt.e_v));
  return e;
}

double score(double d_mm, double eps_n_deg, double eps_i_deg) {
  return 0.2 * d_mm + 0.6 * eps_n_deg + 0.2 * eps_i_deg;
}

double median(std::vector<double> v) {
  if (v.empty()) throw PreconditionError("median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

ReportRow mean_row(std::span<const ReportRow> rows) {
  if (rows.empty()) throw PreconditionError("mean_row: no rows");
  ReportRow m{"mean"};
  for (const auto& r : rows) {
    m.d_mm += r.d_mm / rows.size();
    m.eps_n_deg += r.eps_n_deg / rows.size();
    m.eps_i_deg += r.eps_i_deg / rows.size();
  }
  m.score = score(m.d_mm, m.eps_n_deg, m.eps_i_deg);
  return m;
}

std::vector<ReportRow> aggregate_errors(const std::vector<std::vector<PlaneErrors>>& samples,
                                        const std::vector<std::string>& plane_names,
                                        bool per_plane) {
  if (samples.empty()) throw PreconditionError("aggregate_errors: no samples");
  const std::size_t n_planes = plane_names.size();
  std::vector<ReportRow> rows;
  for (std::size_t p = 0; p < n_planes; ++p) {
    std::vector<double> d, en, ei;
    for (const auto& s : samples) {
      if (s.size() != n_planes) throw PreconditionError("aggregate_errors: ragged plane count");
      d.push_back(s[p].d_mm);
      en.push_back(s[p].eps_n_deg);
      ei.push_back(s[p].eps_i_deg);
    }
    ReportRow r{plane_names[p], median(d), median(en), median(ei), 0.0};
    r.score = score(r.d_mm, r.eps_n_deg, r.eps_i_deg);
    rows.push_back(r);
  }
  const ReportRow m = mean_row(rows);
  if (!per_plane) return {m};
  rows.push_back(m);
  return rows;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "plane,d_mm,eps_n_deg,eps_i_deg,score\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows)
    out << r.plane << ',' << r.d_mm << ',' << r.eps_n_deg << ',' << r.eps_i_deg << ',' << r.score << '\n';
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ostringstream ss;
  write_report_csv(ss, rows);
  write_file_atomic(path, ss.str());
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "plane,d_mm,eps_n_deg,eps_i_deg,score")
    throw ValidationError(path.string() + ": unexpected report header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    ReportRow r;
    std::string tok;
    std::getline(ls, r.plane, ',');
    double* fields[] = {&r.d_mm, &r.eps_n_deg, &r.eps_i_deg, &r.score};
    for (double* f : fields) {
      if (!std::getline(ls, tok, ',')) throw ValidationError(path.string() + ": short report row");
      *f = std::stod(tok);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace planereg
