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

#pragma once

// Plane annotation files: one plane per line,
//   name Ax Ay Az ux uy uz vx vy vz
// in world millimetres. Blank lines and '#' comments are ignored.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "planereg/geometry.hpp"

namespace planereg {

struct NamedPlane {
  std::string name;
  PlaneFrame frame;
};

std::vector<NamedPlane> parse_planes(std::istream& in, const std::string& source = "<stream>");
std::vector<NamedPlane> read_planes(const std::filesystem::path& path);
void write_planes(std::ostream& out, const std::vector<NamedPlane>& planes);
void write_planes(const std::filesystem::path& path, const std::vector<NamedPlane>& planes);

}  // namespace planereg
