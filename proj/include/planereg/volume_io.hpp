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

// Volume files are a text header `<name>.vhdr`
//   dims: nx ny nz
//   spacing_mm: sx sy sz
//   dtype: int16le
// next to `<name>.vraw` holding little-endian int16 samples, x fastest.
// Slices are written as binary PGM (P5, maxval 255).

#include <filesystem>

#include "planereg/volume.hpp"

namespace planereg {

/// `path` may name the .vhdr, the .vraw or the common stem.
Volume read_volume(const std::filesystem::path& path);
/// Writes `<stem>.vhdr` and `<stem>.vraw`; returns the header path.
std::filesystem::path write_volume(const std::filesystem::path& stem, const Volume& v);

void write_pgm(const std::filesystem::path& path, const Image8& img);
Image8 read_pgm(const std::filesystem::path& path);

}  // namespace planereg
