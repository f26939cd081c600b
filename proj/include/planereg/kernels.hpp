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

// Dense arithmetic inner loops used by the network and the optimizer.
//
// Every kernel has a portable scalar reference implementation. Float kernels
// additionally have an AVX2/FMA variant that is selected at runtime when the
// CPU supports it. Double-precision calls always take the scalar path.

#include <cstddef>
#include <optional>
#include <string_view>

namespace planereg::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// True if `isa` was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// The instruction set the float kernels currently dispatch to.
Isa active_isa();

/// Forces dispatch to `isa` (or back to auto-detection with nullopt).
/// Requesting an unavailable ISA throws std::invalid_argument.
void force_isa(std::optional<Isa> isa);

enum class Trans { kNo, kYes };

// C[M x N] = A'[M x K] * B'[K x N] (+ C when accumulate). A' is A or A^T
// depending on `ta`, same for B. All matrices row-major with leading dims.
void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
          const float* b, int ldb, float* c, int ldc, bool accumulate);
void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double* c, int ldc, bool accumulate);

// x[i] = max(x[i], 0)
void relu_inplace(float* x, std::size_t n);
void relu_inplace(double* x, std::size_t n);

// grad[i] = activation[i] > 0 ? grad[i] : 0
void relu_backward(const float* activation, float* grad, std::size_t n);
void relu_backward(const double* activation, double* grad, std::size_t n);

// velocity = momentum * velocity + grad; param -= lr * velocity
void sgd_momentum(float* param, float* velocity, const float* grad,
                  std::size_t n, float lr, float momentum);
void sgd_momentum(double* param, double* velocity, const double* grad,
                  std::size_t n, double lr, double momentum);

namespace scalar {
void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
          const float* b, int ldb, float* c, int ldc, bool accumulate);
void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double* c, int ldc, bool accumulate);
void relu_inplace(float* x, std::size_t n);
void relu_inplace(double* x, std::size_t n);
void relu_backward(const float* activation, float* grad, std::size_t n);
void relu_backward(const double* activation, double* grad, std::size_t n);
void sgd_momentum(float* param, float* velocity, const float* grad,
                  std::size_t n, float lr, float momentum);
void sgd_momentum(double* param, double* velocity, const double* grad,
                  std::size_t n, double lr, double momentum);
}  // namespace scalar

namespace avx2 {
void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
          const float* b, int ldb, float* c, int ldc, bool accumulate);
void relu_inplace(float* x, std::size_t n);
void relu_backward(const float* activation, float* grad, std::size_t n);
void sgd_momentum(float* param, float* velocity, const float* grad,
                  std::size_t n, float lr, float momentum);
}  // namespace avx2

}  // namespace planereg::kernels
