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

#include "planereg/plane_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "planereg/fileutil.hpp"

namespace planereg {

std::vector<NamedPlane> parse_planes(std::istream& in, const std::string& source) {
  std::vector<NamedPlane> planes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    NamedPlane p;
    if (!(ls >> p.name)) continue;
    double v[9];
    for (double& x : v) {
      if (!(ls >> x))
        throw ValidationError(source + ":" + std::to_string(lineno) +
                              ": expected 'name Ax Ay Az ux uy uz vx vy vz'");
    }
    std::string extra;
    if (ls >> extra)
      throw ValidationError(source + ":" + std::to_string(lineno) + ": trailing token '" + extra + "'");
    p.frame.center = Vec3(v[0], v[1], v[2]);
    p.frame.e_u = Vec3(v[3], v[4], v[5]);
    p.frame.e_v = Vec3(v[6], v[7], v[8]);
    try {
      p.frame.validate(1e-6);
    } catch (const PreconditionError& e) {
      throw ValidationError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    planes.push_back(std::move(p));
  }
  return planes;
}

std::vector<NamedPlane> read_planes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open plane file " + path.string());
  return parse_planes(in, path.string());
}

void write_planes(std::ostream& out, const std::vector<NamedPlane>& planes) {
  out << "# name Ax Ay Az ux uy uz vx vy vz (mm, world coordinates)\n";
  out << std::setprecision(17);
  for (const auto& p : planes) {
    const auto& f = p.frame;
    out << p.name << ' ' << f.center.x() << ' ' << f.center.y() << ' ' << f.center.z() << ' '
        << f.e_u.x() << ' ' << f.e_u.y() << ' ' << f.e_u.z() << ' ' << f.e_v.x() << ' '
        << f.e_v.y() << ' ' << f.e_v.z() << '\n';
  }
}

void write_planes(const std::filesystem::path& path, const std::vector<NamedPlane>& planes) {
  std::ostringstream ss;
  write_planes(ss, planes);
  write_file_atomic(path, ss.str());
}

}  // namespace planereg
