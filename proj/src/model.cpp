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

#include "planereg/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "planereg/kernels.hpp"
#include "planereg/rng.hpp"

namespace planereg {

using kernels::Trans;

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
Tensor<T>::Tensor(std::vector<int> s) : shape(std::move(s)) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  values.assign(n, T(0));
}

template <typename T>
std::vector<T>& Tensor<T>::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), T(0));
  return grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  ensure_grad();
  std::fill(grad.begin(), grad.end(), T(0));
}

template <typename T>
void Tensor<T>::check_finite(const std::string& what) const {
  for (const T& v : values)
    if (!std::isfinite(v)) throw NumericalError("non-finite value in " + what);
}

// ---------------------------------------------------------------------------
// Config

int output_layout(RotationKind kind, int n_planes, bool combined) {
  if (n_planes < 1) throw PreconditionError("n_planes must be >= 1");
  const int per_plane = 3 + encoding_length(kind);
  return combined ? per_plane * n_planes : per_plane;
}

Dims NetworkConfig::feature_dims() const {
  Dims d = input_dims;
  for (std::size_t b = 0; b < channels.size(); ++b)
    for (int& x : d) x /= 2;
  return d;
}

std::size_t NetworkConfig::feature_count() const {
  return voxel_count(feature_dims()) * static_cast<std::size_t>(channels.back());
}

std::size_t NetworkConfig::parameter_count() const {
  std::size_t n = 0;
  int c_in = 1;
  for (int c : channels) {
    n += (27 * std::size_t(c_in) + 1) * std::size_t(c);
    c_in = c;
  }
  std::size_t in = feature_count();
  for (int w : fc_widths) {
    n += (in + 1) * std::size_t(w);
    in = std::size_t(w);
  }
  n += (in + 1) * std::size_t(n_out());
  return n;
}

void NetworkConfig::validate() const {
  if (channels.empty()) throw PreconditionError("network needs at least one conv block");
  for (int c : channels)
    if (c < 1) throw PreconditionError("channel counts must be positive");
  for (int w : fc_widths)
    if (w < 1) throw PreconditionError("dense widths must be positive");
  for (int d : input_dims)
    if (d < (1 << channels.size()))
      throw PreconditionError("input dims too small for " + std::to_string(channels.size()) +
                              " pooling stages");
  (void)n_out();
}

template <typename T>
void he_init(std::span<T> weights, int fan_in, std::mt19937_64& rng) {
  if (fan_in <= 0) throw PreconditionError("he_init: fan_in must be positive");
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (T& w : weights) w = static_cast<T>(dist(rng));
}

template void he_init<float>(std::span<float>, int, std::mt19937_64&);
template void he_init<double>(std::span<double>, int, std::mt19937_64&);

double step_decay_lr(double lr0, double decay, int step_size, int epoch) {
  if (step_size <= 0) return lr0;
  return lr0 * std::pow(decay, epoch / step_size);
}

// ---------------------------------------------------------------------------
// Conv helpers. Activations are [C, D, H, W] with W fastest.

namespace {

template <typename T>
void im2col(const T* in, int channels, const Dims& d, T* col) {
  const int w = d[0], h = d[1], depth = d[2];
  const std::size_t plane = std::size_t(w) * h;
  const std::size_t vol = plane * depth;
  std::size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    const T* src = in + c * vol;
    for (int kz = -1; kz <= 1; ++kz) {
      for (int ky = -1; ky <= 1; ++ky) {
        for (int kx = -1; kx <= 1; ++kx, ++row) {
          T* dst = col + row * vol;
          for (int z = 0; z < depth; ++z) {
            const int zz = z + kz;
            for (int y = 0; y < h; ++y) {
              T* out = dst + (std::size_t(z) * h + y) * w;
              const int yy = y + ky;
              if (zz < 0 || zz >= depth || yy < 0 || yy >= h) {
                std::fill_n(out, w, T(0));
                continue;
              }
              const T* s = src + (std::size_t(zz) * h + yy) * w;
              const int x0 = std::max(0, -kx);
              const int x1 = std::min(w, w - kx);
              if (x0 > 0) out[0] = T(0);
              if (x1 < w) out[w - 1] = T(0);
              std::copy(s + x0 + kx, s + x1 + kx, out + x0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int channels, const Dims& d, T* in_grad) {
  const int w = d[0], h = d[1], depth = d[2];
  const std::size_t plane = std::size_t(w) * h;
  const std::size_t vol = plane * depth;
  std::fill_n(in_grad, vol * channels, T(0));
  std::size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    T* dst = in_grad + c * vol;
    for (int kz = -1; kz <= 1; ++kz) {
      for (int ky = -1; ky <= 1; ++ky) {
        for (int kx = -1; kx <= 1; ++kx, ++row) {
          const T* src = col + row * vol;
          for (int z = 0; z < depth; ++z) {
            const int zz = z + kz;
            if (zz < 0 || zz >= depth) continue;
            for (int y = 0; y < h; ++y) {
              const int yy = y + ky;
              if (yy < 0 || yy >= h) continue;
              const T* s = src + (std::size_t(z) * h + y) * w;
              T* o = dst + (std::size_t(zz) * h + yy) * w;
              const int x0 = std::max(0, -kx);
              const int x1 = std::min(w, w - kx);
              for (int x = x0; x < x1; ++x) o[x + kx] += s[x];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void max_pool(const T* in, int channels, const Dims& d, T* out, std::int32_t* argmax) {
  const int ow = d[0] / 2, oh = d[1] / 2, od = d[2] / 2;
  const std::size_t in_vol = voxel_count(d);
  std::size_t o = 0;
  for (int c = 0; c < channels; ++c) {
    const T* src = in + c * in_vol;
    for (int z = 0; z < od; ++z) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          std::int32_t best = -1;
          T best_v = T(0);
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const std::int32_t idx = static_cast<std::int32_t>(
                    ((std::size_t(2 * z + dz) * d[1]) + (2 * y + dy)) * d[0] + (2 * x + dx));
                if (best < 0 || src[idx] > best_v) {
                  best = idx;
                  best_v = src[idx];
                }
              }
          out[o] = best_v;
          argmax[o] = best;
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Network

template <typename T>
struct Network<T>::Workspace {
  struct Block {
    std::vector<T> col;     // [27 c_in, P]
    std::vector<T> conv;    // [c_out, P] after ReLU
    std::vector<T> pooled;  // [c_out, P / 8]
    std::vector<std::int32_t> argmax;
  };
  std::vector<Block> blocks;
  std::vector<std::vector<T>> dense;  // dense[0] = features, dense[l + 1] = layer l output
  std::vector<T> dconv, dcol, dprev, dcur;
};

template <typename T>
Network<T>::Network(NetworkConfig cfg) : cfg_(std::move(cfg)), ws_(std::make_shared<Workspace>()) {
  cfg_.validate();
  int c_in = 1;
  Dims d = cfg_.input_dims;
  for (int c : cfg_.channels) {
    block_in_dims_.push_back(d);
    params_.emplace_back(std::vector<int>{c, c_in, 3, 3, 3});
    params_.emplace_back(std::vector<int>{c});
    c_in = c;
    for (int& x : d) x /= 2;
  }
  int in = static_cast<int>(cfg_.feature_count());
  std::vector<int> widths = cfg_.fc_widths;
  widths.push_back(cfg_.n_out());
  for (int w : widths) {
    params_.emplace_back(std::vector<int>{w, in});
    params_.emplace_back(std::vector<int>{w});
    in = w;
  }
}

template <typename T>
Network<T>::Network(const Network& other)
    : cfg_(other.cfg_),
      params_(other.params_),
      block_in_dims_(other.block_in_dims_),
      ws_(std::make_shared<Workspace>()) {}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    params_ = other.params_;
    block_in_dims_ = other.block_in_dims_;
    ws_ = std::make_shared<Workspace>();
    has_forward_ = false;
  }
  return *this;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename T>
void Network<T>::he_initialize(std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "he-init"));
  for (std::size_t i = 0; i < params_.size(); i += 2) {
    auto& w = params_[i];
    int fan_in = 1;
    for (std::size_t a = 1; a < w.shape.size(); ++a) fan_in *= w.shape[a];
    he_init(std::span<T>(w.values), fan_in, rng);
    std::fill(params_[i + 1].values.begin(), params_[i + 1].values.end(), T(0));
  }
  has_forward_ = false;
}

template <typename T>
std::vector<T> Network<T>::run_forward(std::span<const T> input, Workspace& ws) const {
  if (input.size() != voxel_count(cfg_.input_dims))
    throw PreconditionError("network input has " + std::to_string(input.size()) +
                            " values, expected " + std::to_string(voxel_count(cfg_.input_dims)));
  const std::size_t n_blocks = cfg_.channels.size();
  ws.blocks.resize(n_blocks);
  const T* x = input.data();
  int c_in = 1;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const Dims& d = block_in_dims_[b];
    const int c_out = cfg_.channels[b];
    const int p = static_cast<int>(voxel_count(d));
    const int k = 27 * c_in;
    auto& blk = ws.blocks[b];
    blk.col.resize(std::size_t(k) * p);
    blk.conv.resize(std::size_t(c_out) * p);
    im2col(x, c_in, d, blk.col.data());
    const auto& w = params_[2 * b].values;
    const auto& bias = params_[2 * b + 1].values;
    kernels::gemm(Trans::kNo, Trans::kNo, c_out, p, k, w.data(), k, blk.col.data(), p,
                  blk.conv.data(), p, false);
    for (int o = 0; o < c_out; ++o) {
      T* row = blk.conv.data() + std::size_t(o) * p;
      const T bo = bias[o];
      for (int i = 0; i < p; ++i) row[i] += bo;
    }
    kernels::relu_inplace(blk.conv.data(), blk.conv.size());
    const Dims pd{d[0] / 2, d[1] / 2, d[2] / 2};
    blk.pooled.resize(std::size_t(c_out) * voxel_count(pd));
    blk.argmax.resize(blk.pooled.size());
    max_pool(blk.conv.data(), c_out, d, blk.pooled.data(), blk.argmax.data());
    x = blk.pooled.data();
    c_in = c_out;
  }

  const std::size_t n_dense = cfg_.fc_widths.size() + 1;
  ws.dense.resize(n_dense + 1);
  ws.dense[0] = ws.blocks.back().pooled;
  for (std::size_t l = 0; l < n_dense; ++l) {
    const auto& w = params_[2 * n_blocks + 2 * l];
    const auto& bias = params_[2 * n_blocks + 2 * l + 1].values;
    const int out = w.shape[0], in = w.shape[1];
    const std::vector<T>& xin = ws.dense[l];
    std::vector<T>& y = ws.dense[l + 1];
    y.assign(out, T(0));
    for (int o = 0; o < out; ++o) {
      const T* wr = w.values.data() + std::size_t(o) * in;
      T acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
      int i = 0;
      for (; i + 4 <= in; i += 4) {
        acc0 += wr[i] * xin[i];
        acc1 += wr[i + 1] * xin[i + 1];
        acc2 += wr[i + 2] * xin[i + 2];
        acc3 += wr[i + 3] * xin[i + 3];
      }
      for (; i < in; ++i) acc0 += wr[i] * xin[i];
      y[o] = (acc0 + acc1) + (acc2 + acc3) + bias[o];
    }
    if (l + 1 < n_dense) kernels::relu_inplace(y.data(), y.size());
  }
  for (const T& v : ws.dense.back())
    if (!std::isfinite(v)) throw NumericalError("non-finite network output");
  return ws.dense.back();
}

template <typename T>
std::vector<T> Network<T>::forward(std::span<const T> input) {
  has_forward_ = false;
  auto out = run_forward(input, *ws_);
  has_forward_ = true;
  return out;
}

template <typename T>
std::vector<T> Network<T>::predict(std::span<const T> input) const {
  Workspace ws;
  return run_forward(input, ws);
}

template <typename T>
void Network<T>::backward(std::span<const T> output_grad) {
  if (!has_forward_) throw std::logic_error("backward() called without a preceding forward()");
  if (output_grad.size() != static_cast<std::size_t>(cfg_.n_out()))
    throw PreconditionError("output gradient has wrong length");
  Workspace& ws = *ws_;
  const std::size_t n_blocks = cfg_.channels.size();
  const std::size_t n_dense = cfg_.fc_widths.size() + 1;

  ws.dcur.assign(output_grad.begin(), output_grad.end());
  for (std::size_t li = n_dense; li-- > 0;) {
    auto& w = params_[2 * n_blocks + 2 * li];
    auto& bias = params_[2 * n_blocks + 2 * li + 1];
    auto& gw = w.ensure_grad();
    auto& gb = bias.ensure_grad();
    const int out = w.shape[0], in = w.shape[1];
    const std::vector<T>& xin = ws.dense[li];
    ws.dprev.assign(in, T(0));
    for (int o = 0; o < out; ++o) {
      const T g = ws.dcur[o];
      gb[o] += g;
      if (g == T(0)) continue;
      T* gwr = gw.data() + std::size_t(o) * in;
      const T* wr = w.values.data() + std::size_t(o) * in;
      for (int i = 0; i < in; ++i) {
        gwr[i] += g * xin[i];
        ws.dprev[i] += g * wr[i];
      }
    }
    // The dense input is post-ReLU for hidden layers; the features come out of
    // a max pool over ReLU outputs, so the same mask applies.
    kernels::relu_backward(xin.data(), ws.dprev.data(), ws.dprev.size());
    std::swap(ws.dcur, ws.dprev);
  }

  // ws.dcur now holds d(features) = d(pooled of the last block).
  for (std::size_t b = n_blocks; b-- > 0;) {
    const Dims& d = block_in_dims_[b];
    const int c_out = cfg_.channels[b];
    const int c_in = b == 0 ? 1 : cfg_.channels[b - 1];
    const int p = static_cast<int>(voxel_count(d));
    const int k = 27 * c_in;
    auto& blk = ws.blocks[b];

    ws.dconv.assign(std::size_t(c_out) * p, T(0));
    const std::size_t pooled_per_c = blk.pooled.size() / c_out;
    for (std::size_t o = 0; o < blk.pooled.size(); ++o) {
      const std::size_t c = o / pooled_per_c;
      ws.dconv[c * p + blk.argmax[o]] += ws.dcur[o];
    }
    kernels::relu_backward(blk.conv.data(), ws.dconv.data(), ws.dconv.size());

    auto& w = params_[2 * b];
    auto& bias = params_[2 * b + 1];
    auto& gw = w.ensure_grad();
    auto& gb = bias.ensure_grad();
    for (int o = 0; o < c_out; ++o) {
      const T* row = ws.dconv.data() + std::size_t(o) * p;
      T acc = 0;
      for (int i = 0; i < p; ++i) acc += row[i];
      gb[o] += acc;
    }
    kernels::gemm(Trans::kNo, Trans::kYes, c_out, k, p, ws.dconv.data(), p, blk.col.data(), p,
                  gw.data(), k, true);
    if (b == 0) break;
    ws.dcol.resize(std::size_t(k) * p);
    kernels::gemm(Trans::kYes, Trans::kNo, k, p, c_out, w.values.data(), k, ws.dconv.data(), p,
                  ws.dcol.data(), p, false);
    ws.dcur.resize(std::size_t(c_in) * p);
    col2im(ws.dcol.data(), c_in, d, ws.dcur.data());
  }
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
std::vector<T> Network<T>::flat_parameters() const {
  std::vector<T> flat;
  flat.reserve(parameter_count());
  for (const auto& p : params_) flat.insert(flat.end(), p.values.begin(), p.values.end());
  return flat;
}

template <typename T>
void Network<T>::set_flat_parameters(std::span<const T> flat) {
  if (flat.size() != parameter_count()) throw PreconditionError("flat parameter size mismatch");
  std::size_t off = 0;
  for (auto& p : params_) {
    std::copy_n(flat.begin() + off, p.size(), p.values.begin());
    off += p.size();
  }
  has_forward_ = false;
}

template <typename T>
void SgdMomentum<T>::step(std::vector<Tensor<T>>& params, T lr) {
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (const auto& p : params) velocity_.emplace_back(p.size(), T(0));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& g = p.ensure_grad();
    if (velocity_[i].size() != p.size()) throw PreconditionError("optimizer state shape mismatch");
    kernels::sgd_momentum(p.values.data(), velocity_[i].data(), g.data(), p.size(), lr, momentum_);
  }
}

template struct Tensor<float>;
template struct Tensor<double>;
template class Network<float>;
template class Network<double>;
template class SgdMomentum<float>;
template class SgdMomentum<double>;

}  // namespace planereg
