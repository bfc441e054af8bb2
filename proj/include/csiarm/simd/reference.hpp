// SPDX-License-Identifier: Apache-2.0
//
// Portable reference kernels. They define the semantics every SIMD variant
// is tested against, and they are the only path for double precision.
#pragma once

#include <cmath>
#include <cstddef>

namespace csiarm::simd::reference {

template <typename T>
void zero_block(int m, int n, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) c[static_cast<std::size_t>(i) * ldc + j] = T(0);
  }
}

template <typename T>
void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
             bool accumulate) {
  if (!accumulate) zero_block(m, n, c, ldc);
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    const T* arow = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
             bool accumulate) {
  if (!accumulate) zero_block(k, n, c, ldc);
  for (int r = 0; r < m; ++r) {
    const T* arow = a + static_cast<std::size_t>(r) * lda;
    const T* brow = b + static_cast<std::size_t>(r) * ldb;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      T* crow = c + static_cast<std::size_t>(p) * ldc;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * ldb;
      T s = T(0);
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      T& out = c[static_cast<std::size_t>(i) * ldc + j];
      out = accumulate ? out + s : s;
    }
  }
}

inline void magnitude(const float* interleaved, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = interleaved[2 * i];
    const double im = interleaved[2 * i + 1];
    out[i] = std::sqrt(re * re + im * im);
  }
}

template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace csiarm::simd::reference
