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

#include <algorithm>
#include <vector>

#include "planereg/kernels.hpp"

namespace planereg::kernels::scalar {
namespace {

template <typename T>
void gemm_impl(Trans ta, Trans tb, int m, int n, int k, const T* a, int lda,
               const T* b, int ldb, T* c, int ldc, bool accumulate) {
  if (!accumulate) {
    for (int i = 0; i < m; ++i) std::fill_n(c + std::size_t(i) * ldc, n, T(0));
  }
  // i-p-j order keeps the innermost loop contiguous in B and C when B is not
  // transposed. A transposed B is copied once so the same loop applies.
  std::vector<T> bt;
  const T* bp = b;
  int ldbp = ldb;
  if (tb == Trans::kYes) {
    bt.resize(std::size_t(k) * n);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j) bt[std::size_t(p) * n + j] = b[std::size_t(j) * ldb + p];
    bp = bt.data();
    ldbp = n;
  }
  for (int i = 0; i < m; ++i) {
    T* crow = c + std::size_t(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T aval = ta == Trans::kNo ? a[std::size_t(i) * lda + p] : a[std::size_t(p) * lda + i];
      if (aval == T(0)) continue;
      const T* brow = bp + std::size_t(p) * ldbp;
      for (int j = 0; j < n; ++j) crow[j] += aval * brow[j];
    }
  }
}

template <typename T>
void relu_impl(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward_impl(const T* act, T* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(act[i] > T(0))) grad[i] = T(0);
}

template <typename T>
void sgd_impl(T* param, T* vel, const T* grad, std::size_t n, T lr, T mom) {
  for (std::size_t i = 0; i < n; ++i) {
    vel[i] = mom * vel[i] + grad[i];
    param[i] -= lr * vel[i];
  }
}

}  // namespace

void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda,
          const float* b, int ldb, float* c, int ldc, bool accumulate) {
  gemm_impl(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void gemm(Trans ta, Trans tb, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double* c, int ldc, bool accumulate) {
  gemm_impl(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void relu_inplace(float* x, std::size_t n) { relu_impl(x, n); }
void relu_inplace(double* x, std::size_t n) { relu_impl(x, n); }
void relu_backward(const float* act, float* grad, std::size_t n) { relu_backward_impl(act, grad, n); }
void relu_backward(const double* act, double* grad, std::size_t n) { relu_backward_impl(act, grad, n); }
void sgd_momentum(float* p, float* v, const float* g, std::size_t n, float lr, float mom) {
  sgd_impl(p, v, g, n, lr, mom);
}
void sgd_momentum(double* p, double* v, const double* g, std::size_t n, double lr, double mom) {
  sgd_impl(p, v, g, n, lr, mom);
}

}  // namespace planereg::kernels::scalar
