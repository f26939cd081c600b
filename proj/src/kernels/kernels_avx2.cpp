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

#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "planereg/kernels.hpp"

namespace planereg::kernels::avx2 {
namespace {

constexpr int kMr = 6;
constexpr int kNr = 16;
constexpr int kKc = 256;
constexpr int kMc = 96;
constexpr int kNc = 3072;

// Packs rows [i0, i0+mc) x cols [p0, p0+kc) of A' into kMr-tall slivers,
// zero-padding the last sliver.
void pack_a(Trans ta, const float* a, int lda, int i0, int mc, int p0, int kc, float* out) {
  for (int ir = 0; ir < mc; ir += kMr) {
    const int rows = std::min(kMr, mc - ir);
    for (int p = 0; p < kc; ++p) {
      int r = 0;
      for (; r < rows; ++r) {
        const int i = i0 + ir + r;
        const int pp = p0 + p;
        *out++ = ta == Trans::kNo ? a[std::size_t(i) * lda + pp] : a[std::size_t(pp) * lda + i];
      }
      for (; r < kMr; ++r) *out++ = 0.0f;
    }
  }
}

void pack_b(Trans tb, const float* b, int ldb, int p0, int kc, int j0, int nc, float* out) {
  for (int jr = 0; jr < nc; jr += kNr) {
    const int cols = std::min(kNr, nc - jr);
    for (int p = 0; p < kc; ++p) {
      const int pp = p0 + p;
      if (tb == Trans::kNo && cols == kNr) {
        const float* src = b + std::size_t(pp) * ldb + j0 + jr;
        _mm256_storeu_ps(out, _mm256_loadu_ps(src));
        _mm256_storeu_ps(out + 8, _mm256_loadu_ps(src + 8));
        out += kNr;
        continue;
      }
      int c = 0;
      for (; c < cols; ++c) {
        const int j = j0 + jr + c;
        *out++ = tb == Trans::kNo ? b[std::size_t(pp) * ldb + j] : b[std::size_t(j) * ldb + pp];
      }
      for (; c < kNr; ++c) *out++ = 0.0f;
    }
  }
}

void micro_kernel(int kc, const float* ap, const float* bp, float* c, int ldc, int rows,
                  int cols, bool add_to_c) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
  __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
  __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
  __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();

  for (int p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    __m256 av = _mm256_broadcast_ss(ap + 0);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(ap + 1);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(ap + 2);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(ap + 3);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
    av = _mm256_broadcast_ss(ap + 4);
    c40 = _mm256_fmadd_ps(av, b0, c40);
    c41 = _mm256_fmadd_ps(av, b1, c41);
    av = _mm256_broadcast_ss(ap + 5);
    c50 = _mm256_fmadd_ps(av, b0, c50);
    c51 = _mm256_fmadd_ps(av, b1, c51);
    ap += kMr;
    bp += kNr;
  }

  alignas(32) float tile[kMr * kNr];
  _mm256_store_ps(tile + 0 * kNr, c00);
  _mm256_store_ps(tile + 0 * kNr + 8, c01);
  _mm256_store_ps(tile + 1 * kNr, c10);
  _mm256_store_ps(tile + 1 * kNr + 8, c11);
  _mm256_store_ps(tile + 2 * kNr, c20);
  _mm256_store_ps(tile + 2 * kNr + 8, c21);
  _mm256_store_ps(tile + 3 * kNr, c30);
  _mm256_store_ps(tile + 3 * kNr + 8, c31);
  _mm256_store_ps(tile + 4 * kNr, c40);
  _mm256_store_ps(tile + 4 * kNr + 8, c41);
  _mm256_store_ps(tile + 5 * kNr, c50);
  _mm256_store_ps(tile + 5 * kNr + 8, c51);

  if (cols == kNr) {
    for (int r = 0; r < rows; ++r) {
      float* crow = c + std::size_t(r) * ldc;
      __m256 t0 = _mm256_load_ps(tile + r * kNr);
      __m256 t1 = _mm256_load_ps(tile + r * kNr + 8);
      if (add_to_c) {
        t0 = _mm256_add_ps(t0, _mm256_loadu_ps(crow));
        t1 = _mm256_add_ps(t1, _mm256_loadu_ps(crow + 8));
      }
      _mm256_storeu_ps(crow, t0);
      _mm256_storeu_ps(crow + 8, t1);
    }
    return;
  }
  for (int r = 0; r < rows; ++r) {
    float* crow = c + std::size_t(r) * ldc;
    for (int j = 0; j < cols; ++j) crow[j] = add_to_c ? crow[j] + tile[r * kNr + j] : tile[r * kNr + j];
  }
}

}  // namespace

void gemm(Trans ta, Trans tb, int m, int n, int k, const float* a, int lda, const float* b,
          int ldb, float* c, int ldc, bool accumulate) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    if (!accumulate)
      for (int i = 0; i < m; ++i) std::fill_n(c + std::size_t(i) * ldc, n, 0.0f);
    return;
  }
  thread_local std::vector<float> apack;
  thread_local std::vector<float> bpack;

  for (int jc = 0; jc < n; jc += kNc) {
    const int nc = std::min(kNc, n - jc);
    const int nc_padded = (nc + kNr - 1) / kNr * kNr;
    for (int pc = 0; pc < k; pc += kKc) {
      const int kc = std::min(kKc, k - pc);
      bpack.resize(std::size_t(nc_padded) * kc);
      pack_b(tb, b, ldb, pc, kc, jc, nc, bpack.data());
      const bool add_to_c = accumulate || pc > 0;
      for (int ic = 0; ic < m; ic += kMc) {
        const int mc = std::min(kMc, m - ic);
        const int mc_padded = (mc + kMr - 1) / kMr * kMr;
        apack.resize(std::size_t(mc_padded) * kc);
        pack_a(ta, a, lda, ic, mc, pc, kc, apack.data());
        for (int jr = 0; jr < nc; jr += kNr) {
          const int cols = std::min(kNr, nc - jr);
          const float* bp = bpack.data() + std::size_t(jr) * kc;
          for (int ir = 0; ir < mc; ir += kMr) {
            const int rows = std::min(kMr, mc - ir);
            const float* ap = apack.data() + std::size_t(ir) * kc;
            float* cblk = c + std::size_t(ic + ir) * ldc + jc + jr;
            micro_kernel(kc, ap, bp, cblk, ldc, rows, cols, add_to_c);
          }
        }
      }
    }
  }
}

void relu_inplace(float* x, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* act, float* grad, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(act + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(grad + i, _mm256_and_ps(mask, _mm256_loadu_ps(grad + i)));
  }
  for (; i < n; ++i)
    if (!(act[i] > 0.0f)) grad[i] = 0.0f;
}

void sgd_momentum(float* param, float* vel, const float* grad, std::size_t n, float lr,
                  float momentum) {
  const __m256 vm = _mm256_set1_ps(momentum);
  const __m256 vlr = _mm256_set1_ps(lr);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_fmadd_ps(vm, _mm256_loadu_ps(vel + i), _mm256_loadu_ps(grad + i));
    _mm256_storeu_ps(vel + i, v);
    _mm256_storeu_ps(param + i, _mm256_fnmadd_ps(vlr, v, _mm256_loadu_ps(param + i)));
  }
  for (; i < n; ++i) {
    vel[i] = momentum * vel[i] + grad[i];
    param[i] -= lr * vel[i];
  }
}

}  // namespace planereg::kernels::avx2
