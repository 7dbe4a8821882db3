// Copyright 2026 The udp-adapt Authors
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

#include <cstddef>
#include <cstring>
#include <vector>

// Dense row-major kernels shared by the tensor ops. All of them are written in
// "axpy" form (innermost loop streams a contiguous row) so the compiler can
// vectorize without reassociating floating-point sums.
namespace udp::kernels {

namespace detail {
// Widest double vector the target handles natively.
#if defined(__AVX512F__)
inline constexpr std::size_t kLanes = 8;
#elif defined(__AVX__)
inline constexpr std::size_t kLanes = 4;
#else
inline constexpr std::size_t kLanes = 2;
#endif
using vd = double __attribute__((vector_size(kLanes * sizeof(double))));

inline vd loadv(const double* p) {
  vd v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void storev(double* p, vd v) { std::memcpy(p, &v, sizeof v); }
}  // namespace detail

// c[M,N] += a[M,K] * b[K,N]
//
// Column panels of b (two vectors wide) are packed contiguously, then 4-row
// blocks of c stay in registers across the whole k loop. Every element still
// accumulates its k terms in ascending order, as the plain triple loop does.
inline void gemm_acc(std::size_t m, std::size_t n, std::size_t k,
                     const double* __restrict a, const double* __restrict b,
                     double* __restrict c) {
  using detail::loadv;
  using detail::storev;
  using detail::vd;
  constexpr std::size_t L = detail::kLanes, nr = 2 * L;
  const std::size_t m4 = m - m % 4, nb = n - n % nr;
  std::vector<double> panel(k * nr);
  for (std::size_t j = 0; j < nb; j += nr) {
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = 0; q < nr; ++q) panel[p * nr + q] = b[p * n + j + q];
    const double* bp = panel.data();
    for (std::size_t i0 = 0; i0 < m4; i0 += 4) {
      const double* a0 = a + i0 * k;
      const double* a1 = a0 + k;
      const double* a2 = a1 + k;
      const double* a3 = a2 + k;
      double* c0 = c + i0 * n + j;
      double* c1 = c0 + n;
      double* c2 = c1 + n;
      double* c3 = c2 + n;
      vd x0 = loadv(c0), y0 = loadv(c0 + L);
      vd x1 = loadv(c1), y1 = loadv(c1 + L);
      vd x2 = loadv(c2), y2 = loadv(c2 + L);
      vd x3 = loadv(c3), y3 = loadv(c3 + L);
      for (std::size_t p = 0; p < k; ++p) {
        const vd lo = loadv(bp + p * nr), hi = loadv(bp + p * nr + L);
        x0 += a0[p] * lo;
        y0 += a0[p] * hi;
        x1 += a1[p] * lo;
        y1 += a1[p] * hi;
        x2 += a2[p] * lo;
        y2 += a2[p] * hi;
        x3 += a3[p] * lo;
        y3 += a3[p] * hi;
      }
      storev(c0, x0);
      storev(c0 + L, y0);
      storev(c1, x1);
      storev(c1 + L, y1);
      storev(c2, x2);
      storev(c2 + L, y2);
      storev(c3, x3);
      storev(c3 + L, y3);
    }
    for (std::size_t i = m4; i < m; ++i) {
      const double* ai = a + i * k;
      double* ci = c + i * n + j;
      vd x = loadv(ci), y = loadv(ci + L);
      for (std::size_t p = 0; p < k; ++p) {
        x += ai[p] * loadv(bp + p * nr);
        y += ai[p] * loadv(bp + p * nr + L);
      }
      storev(ci, x);
      storev(ci + L, y);
    }
  }
  if (nb == n) return;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      for (std::size_t j = nb; j < n; ++j) c[i * n + j] += av * b[p * n + j];
    }
}

// out[N,M] = in[M,N]^T
inline void transpose(std::size_t m, std::size_t n, const double* __restrict in,
                      double* __restrict out) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < m; i0 += kBlock) {
    for (std::size_t j0 = 0; j0 < n; j0 += kBlock) {
      const std::size_t i1 = i0 + kBlock < m ? i0 + kBlock : m;
      const std::size_t j1 = j0 + kBlock < n ? j0 + kBlock : n;
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) out[j * m + i] = in[i * n + j];
    }
  }
}

inline std::vector<double> transposed(std::size_t m, std::size_t n,
                                      const double* in) {
  std::vector<double> out(m * n);
  transpose(m, n, in, out.data());
  return out;
}

}  // namespace udp::kernels
