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

#include "planereg/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "planereg/fileutil.hpp"

namespace planereg {
namespace {

std::filesystem::path stem_of(std::filesystem::path p) {
  if (p.extension() == ".vhdr" || p.extension() == ".vraw") p.replace_extension();
  return p;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  std::filesystem::path p = stem;
  p += suffix;
  return p;
}

std::int16_t from_le(const unsigned char* b) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(b[0]) |
                                   (static_cast<std::uint16_t>(b[1]) << 8));
}

}  // namespace

Volume read_volume(const std::filesystem::path& path) {
  const auto stem = stem_of(path);
  const auto hdr_path = with_suffix(stem, ".vhdr");
  std::istringstream hdr(read_file(hdr_path));
  Dims dims{0, 0, 0};
  Vec3 spacing = Vec3::Zero();
  bool have_dims = false, have_spacing = false;
  std::string line, dtype;
  int lineno = 0;
  while (std::getline(hdr, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    const std::string where = hdr_path.string() + ":" + std::to_string(lineno);
    if (key == "dims:") {
      if (!(ls >> dims[0] >> dims[1] >> dims[2])) throw ValidationError(where + ": bad dims line");
      have_dims = true;
    } else if (key == "spacing_mm:") {
      if (!(ls >> spacing[0] >> spacing[1] >> spacing[2]))
        throw ValidationError(where + ": bad spacing_mm line");
      have_spacing = true;
    } else if (key == "dtype:") {
      ls >> dtype;
      if (dtype != "int16le") throw ValidationError(where + ": unsupported dtype '" + dtype + "'");
    } else {
      throw ValidationError(where + ": unknown header key '" + key + "'");
    }
  }
  if (!have_dims || !have_spacing || dtype.empty())
    throw ValidationError(hdr_path.string() + ": header needs dims, spacing_mm and dtype");
  for (int d : dims)
    if (d < 2) throw ValidationError(hdr_path.string() + ": dims must be >= 2");

  const std::string raw = read_file(with_suffix(stem, ".vraw"));
  const std::size_t n = voxel_count(dims);
  if (raw.size() != 2 * n)
    throw ValidationError(with_suffix(stem, ".vraw").string() + ": expected " +
                          std::to_string(2 * n) + " bytes, found " + std::to_string(raw.size()));
  std::vector<std::int16_t> values(n);
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  for (std::size_t i = 0; i < n; ++i) values[i] = from_le(bytes + 2 * i);
  try {
    return Volume(dims, spacing, std::move(values));
  } catch (const PreconditionError& e) {
    throw ValidationError(stem.string() + ": " + e.what());
  }
}

std::filesystem::path write_volume(const std::filesystem::path& stem_in, const Volume& v) {
  const auto stem = stem_of(stem_in);
  std::ostringstream hdr;
  hdr.precision(17);
  hdr << "dims: " << v.dims()[0] << ' ' << v.dims()[1] << ' ' << v.dims()[2] << '\n'
      << "spacing_mm: " << v.spacing().x() << ' ' << v.spacing().y() << ' ' << v.spacing().z()
      << '\n'
      << "dtype: int16le\n";
  std::string raw(2 * v.values().size(), '\0');
  for (std::size_t i = 0; i < v.values().size(); ++i) {
    const auto u = static_cast<std::uint16_t>(v.values()[i]);
    raw[2 * i] = static_cast<char>(u & 0xff);
    raw[2 * i + 1] = static_cast<char>(u >> 8);
  }
  write_file_atomic(with_suffix(stem, ".vraw"), raw);
  const auto hdr_path = with_suffix(stem, ".vhdr");
  write_file_atomic(hdr_path, hdr.str());
  return hdr_path;
}

void write_pgm(const std::filesystem::path& path, const Image8& img) {
  std::string data = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  data.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  write_file_atomic(path, data);
}

Image8 read_pgm(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
    throw ValidationError(path.string() + ": not an 8-bit P5 PGM");
  in.get();
  Image8 img{w, h, std::vector<std::uint8_t>(std::size_t(w) * h)};
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw ValidationError(path.string() + ": truncated pixel data");
  return img;
}

}  // namespace planereg
