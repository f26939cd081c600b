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

#include <cstdint>
#include <random>
#include <string_view>

namespace planereg {

/// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

/// Seeded generator with named substreams. Each substream depends only on
/// (seed, index, name), so results don't depend on how draws interleave.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t index = 0);

  std::mt19937_64& spatial() { return spatial_; }
  std::mt19937_64& intensity() { return intensity_; }
  std::mt19937_64& mirror() { return mirror_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::mt19937_64 spatial_;
  std::mt19937_64 intensity_;
  std::mt19937_64 mirror_;
};

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace planereg
