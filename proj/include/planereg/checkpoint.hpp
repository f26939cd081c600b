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

// Checkpoint layout (all integers little-endian):
//   bytes 0-7   magic "PLNRCKPT"
//   u32         format version (1)
//   u32         header length H
//   H bytes     text header, one `key=value` per line (network config and
//               the preprocessing needed to reproduce inference)
//   u64         parameter count N
//   N x f32     parameters in Network::parameters() order, little-endian

#include <filesystem>
#include <string>
#include <vector>

#include "planereg/model.hpp"
#include "planereg/volume.hpp"

namespace planereg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  NetworkConfig network;
  Vec3 input_spacing = Vec3::Constant(2.2);
  WindowConfig window;
  std::vector<std::string> plane_names;  // planes this network predicts, in output order
};

struct Checkpoint {
  CheckpointMeta meta;
  std::vector<float> parameters;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const Network<float>& net);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Network restored from a checkpoint.
Network<float> load_network(const Checkpoint& ckpt);

std::string serialize_checkpoint(const CheckpointMeta& meta, std::span<const float> params);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

}  // namespace planereg
