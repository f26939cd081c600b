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

#include <atomic>
#include <stdexcept>
#include <string>

#include "planereg/kernels.hpp"

namespace planereg::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(PLANEREG_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() { return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar; }

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  if (isa == Isa::kScalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(std::optional<Isa> isa) {
  if (!isa) {
    current().store(detect());
    return;
  }
  if (!isa_available(*isa))
    throw std::invalid_argument("instruction set not available: " + std::string(isa_name(*isa)));
  current().store(*isa);
}

#if defined(PLANEREG_BUILD_AVX2)
#define PLANEREG_DISPATCH_F32(call_avx2, call_scalar) \
  if (active_isa() == Isa::kAvx2) {                    \
    call_avx2;                                         \
  } else {                                             \
    call_scalar;                                       \
  }
#else
#define PLANEREG_DISPATCH_F32(call_avx2, call_scalar) call_scalar;
#endif

void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda, const float* b,
          int ldb, float* c, int ldc, bool accumulate) {
  PLANEREG_DISPATCH_F32(avx2::gemm(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate),
                        scalar::gemm(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate))
}

void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda, const double* b,
          int ldb, double* c, int ldc, bool accumulate) {
  scalar::gemm(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void relu_inplace(float* x, std::size_t n) {
  PLANEREG_DISPATCH_F32(avx2::relu_inplace(x, n), scalar::relu_inplace(x, n))
}
void relu_inplace(double* x, std::size_t n) { scalar::relu_inplace(x, n); }

void relu_backward(const float* act, float* grad, std::size_t n) {
  PLANEREG_DISPATCH_F32(avx2::relu_backward(act, grad, n), scalar::relu_backward(act, grad, n))
}
void relu_backward(const double* act, double* grad, std::size_t n) {
  scalar::relu_backward(act, grad, n);
}

void sgd_momentum(float* p, float* v, const float* g, std::size_t n, float lr, float mom) {
  PLANEREG_DISPATCH_F32(avx2::sgd_momentum(p, v, g, n, lr, mom),
                        scalar::sgd_momentum(p, v, g, n, lr, mom))
}
void sgd_momentum(double* p, double* v, const double* g, std::size_t n, double lr, double mom) {
  scalar::sgd_momentum(p, v, g, n, lr, mom);
}

}  // namespace planereg::kernels
