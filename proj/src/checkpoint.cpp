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

#include "planereg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <sstream>

#include "planereg/fileutil.hpp"

namespace planereg {
namespace {

constexpr char kMagic[8] = {'P', 'L', 'N', 'R', 'C', 'K', 'P', 'T'};

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos, const std::string& source) {
  if (pos + sizeof(U) > in.size()) throw ValidationError(source + ": truncated checkpoint");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) v.push_back(std::stoi(tok));
  return v;
}

}  // namespace

std::string serialize_checkpoint(const CheckpointMeta& meta, std::span<const float> params) {
  std::ostringstream hdr;
  hdr.precision(17);
  const auto& n = meta.network;
  hdr << "input_dims=" << n.input_dims[0] << ',' << n.input_dims[1] << ',' << n.input_dims[2] << '\n'
      << "input_spacing=" << meta.input_spacing.x() << ',' << meta.input_spacing.y() << ','
      << meta.input_spacing.z() << '\n'
      << "channels=" << join_ints(n.channels) << '\n'
      << "fc_widths=" << join_ints(n.fc_widths) << '\n'
      << "representation=" << to_string(n.kind) << '\n'
      << "n_planes=" << n.n_planes << '\n'
      << "combined=" << (n.combined ? 1 : 0) << '\n'
      << "clip_lo=" << meta.window.clip_lo << '\n'
      << "clip_hi=" << meta.window.clip_hi << '\n'
      << "window_gain=" << meta.window.gain << '\n'
      << "plane_names=";
  for (std::size_t i = 0; i < meta.plane_names.size(); ++i) hdr << (i ? "," : "") << meta.plane_names[i];
  hdr << '\n';
  const std::string h = hdr.str();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  put_le<std::uint64_t>(out, params.size());
  out.reserve(out.size() + 4 * params.size());
  for (float f : params) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ValidationError(source + ": not a checkpoint (bad magic)");
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos, source);
  if (version != kCheckpointVersion)
    throw ValidationError(source + ": unsupported checkpoint version " + std::to_string(version));
  const auto hlen = get_le<std::uint32_t>(bytes, pos, source);
  if (pos + hlen > bytes.size()) throw ValidationError(source + ": truncated checkpoint header");
  std::istringstream hdr(bytes.substr(pos, hlen));
  pos += hlen;

  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(hdr, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError(source + ": checkpoint header lacks '" + key + "'");
    return it->second;
  };

  Checkpoint ck;
  try {
    auto& n = ck.meta.network;
    const auto dims = split_ints(need("input_dims"));
    if (dims.size() != 3) throw ValidationError(source + ": bad input_dims");
    n.input_dims = {dims[0], dims[1], dims[2]};
    std::stringstream sp(need("input_spacing"));
    std::string tok;
    for (int a = 0; a < 3 && std::getline(sp, tok, ','); ++a) ck.meta.input_spacing[a] = std::stod(tok);
    n.channels = split_ints(need("channels"));
    n.fc_widths = split_ints(need("fc_widths"));
    n.kind = parse_rotation_kind(need("representation"));
    n.n_planes = std::stoi(need("n_planes"));
    n.combined = need("combined") == "1";
    ck.meta.window.clip_lo = std::stod(need("clip_lo"));
    ck.meta.window.clip_hi = std::stod(need("clip_hi"));
    ck.meta.window.gain = std::stod(need("window_gain"));
    std::stringstream names(need("plane_names"));
    while (std::getline(names, tok, ','))
      if (!tok.empty()) ck.meta.plane_names.push_back(tok);
    n.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(source + ": malformed checkpoint header: " + e.what());
  }

  const auto count = get_le<std::uint64_t>(bytes, pos, source);
  if (count != ck.meta.network.parameter_count())
    throw ValidationError(source + ": parameter count does not match the stored network config");
  if (pos + 4 * count != bytes.size()) throw ValidationError(source + ": parameter blob size mismatch");
  ck.parameters.resize(count);
  for (auto& f : ck.parameters) f = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos, source));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const Network<float>& net) {
  const auto flat = net.flat_parameters();
  write_file_atomic(path, serialize_checkpoint(meta, flat));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path), path.string());
}

Network<float> load_network(const Checkpoint& ckpt) {
  Network<float> net(ckpt.meta.network);
  net.set_flat_parameters(ckpt.parameters);
  return net;
}

}  // namespace planereg
