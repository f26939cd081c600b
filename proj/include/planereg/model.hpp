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

// Plane regression CNN: n conv blocks (3^3 conv, stride 1, zero padding 1,
// ReLU, 2^3 max pool stride 2) followed by fully connected layers with ReLU
// and a linear output head. No dropout, no batch statistics.

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "planereg/geometry.hpp"
#include "planereg/volume.hpp"

namespace planereg {

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> values;
  std::vector<T> grad;  // allocated on first use

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  std::size_t size() const { return values.size(); }
  std::vector<T>& ensure_grad();
  void zero_grad();
  /// Throws NumericalError naming `what` if any value is NaN or infinite.
  void check_finite(const std::string& what) const;
};

/// Output nodes: per plane 3 translation values plus 4 (quaternion) or 6
/// (Euler sin/cos, 6D) rotation values; multiplied by n_planes when combined.
int output_layout(RotationKind kind, int n_planes, bool combined);

struct NetworkConfig {
  Dims input_dims{72, 72, 72};
  std::vector<int> channels{8, 16, 32, 64, 128};
  std::vector<int> fc_widths{1024, 256};  // hidden layers; output layer appended
  RotationKind kind = RotationKind::kSixD;
  int n_planes = 3;
  bool combined = true;

  int n_out() const { return output_layout(kind, n_planes, combined); }
  /// Planes predicted by one network.
  int planes_per_network() const { return combined ? n_planes : 1; }
  Dims feature_dims() const;
  std::size_t feature_count() const;
  /// sum over blocks of (27 c_in + 1) c_out plus sum over dense layers of
  /// (in + 1) out.
  std::size_t parameter_count() const;
  void validate() const;
};

/// Fills `weights` from Normal(0, sqrt(2 / fan_in)).
template <typename T>
void he_init(std::span<T> weights, int fan_in, std::mt19937_64& rng);

template <typename T>
class Network {
 public:
  explicit Network(NetworkConfig cfg);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const NetworkConfig& config() const { return cfg_; }

  /// Parameters in a fixed order: for each conv block weight [c_out, c_in, 3,
  /// 3, 3] then bias [c_out]; for each dense layer weight [out, in] then bias.
  std::vector<Tensor<T>>& parameters() { return params_; }
  const std::vector<Tensor<T>>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  /// He-normal weights and zero biases, deterministic in `seed`.
  void he_initialize(std::uint64_t seed);

  /// Forward pass keeping the activations needed by backward().
  std::vector<T> forward(std::span<const T> input);
  /// Forward pass without touching training state; safe to call concurrently
  /// on a network that is not being trained.
  std::vector<T> predict(std::span<const T> input) const;
  /// Accumulates dLoss/dParam into each parameter's grad given dLoss/dOutput
  /// of the most recent forward(). Throws std::logic_error without one.
  void backward(std::span<const T> output_grad);
  void zero_grad();

  /// Flat copies, in parameters() order.
  std::vector<T> flat_parameters() const;
  void set_flat_parameters(std::span<const T> flat);

  struct Workspace;

 private:
  std::vector<T> run_forward(std::span<const T> input, Workspace& ws) const;

  NetworkConfig cfg_;
  std::vector<Tensor<T>> params_;
  std::vector<Dims> block_in_dims_;
  std::shared_ptr<Workspace> ws_;
  bool has_forward_ = false;
};

/// Classic momentum: v = momentum v + g; p -= lr v.
template <typename T>
class SgdMomentum {
 public:
  explicit SgdMomentum(T momentum) : momentum_(momentum) {}
  void step(std::vector<Tensor<T>>& params, T lr);
  std::vector<std::vector<T>>& velocity() { return velocity_; }

 private:
  T momentum_;
  std::vector<std::vector<T>> velocity_;
};

/// lr0 * decay^floor(epoch / step_size).
double step_decay_lr(double lr0, double decay, int step_size, int epoch);

extern template struct Tensor<float>;
extern template struct Tensor<double>;
extern template class Network<float>;
extern template class Network<double>;
extern template class SgdMomentum<float>;
extern template class SgdMomentum<double>;

}  // namespace planereg
