// SPDX-License-Identifier: Apache-2.0
//
// AVX2 + FMA kernels. This translation unit is built with -mavx2 -mfma and is
// only entered after the dispatcher has checked the CPU feature bits.
#include "csiarm/simd/kernels.hpp"
#include "csiarm/simd/reference.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace csiarm::simd {
namespace {

constexpr int kRowTile = 6;
constexpr int kColTile = 16;
constexpr int kDepthBlock = 256;

inline __m256i lane_mask(int count) {
  const __m256i idx = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  return _mm256_cmpgt_epi32(_mm256_set1_epi32(count), idx);
}

inline float hsum(__m256 v) {
  __m128 lo = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// Register tile: MR rows of C by up to 16 columns. A element (r, p) lives at
// a[r * rs + p * cs], which lets the same tile serve both A and A^T.
template <int MR, bool Full>
void micro_tile(int depth, const float* a, std::ptrdiff_t rs, std::ptrdiff_t cs, const float* b,
                int ldb, float* c, int ldc, int nr, bool load_c) {
  __m256 acc0[MR];
  __m256 acc1[MR];
  const __m256i m0 = lane_mask(std::min(nr, 8));
  const __m256i m1 = lane_mask(nr - 8);

#pragma GCC unroll 6
  for (int r = 0; r < MR; ++r) {
    if (load_c) {
      float* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
      acc0[r] = Full ? _mm256_loadu_ps(crow) : _mm256_maskload_ps(crow, m0);
      acc1[r] = Full ? _mm256_loadu_ps(crow + 8) : _mm256_maskload_ps(crow + 8, m1);
    } else {
      acc0[r] = _mm256_setzero_ps();
      acc1[r] = _mm256_setzero_ps();
    }
  }

  for (int p = 0; p < depth; ++p) {
    const float* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
    const __m256 b0 = Full ? _mm256_loadu_ps(brow) : _mm256_maskload_ps(brow, m0);
    const __m256 b1 = Full ? _mm256_loadu_ps(brow + 8) : _mm256_maskload_ps(brow + 8, m1);
    const float* acol = a + p * cs;
#pragma GCC unroll 6
    for (int r = 0; r < MR; ++r) {
      const __m256 av = _mm256_broadcast_ss(acol + r * rs);
      acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
      acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
    }
  }

#pragma GCC unroll 6
  for (int r = 0; r < MR; ++r) {
    float* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
    if (Full) {
      _mm256_storeu_ps(crow, acc0[r]);
      _mm256_storeu_ps(crow + 8, acc1[r]);
    } else {
      _mm256_maskstore_ps(crow, m0, acc0[r]);
      if (nr > 8) _mm256_maskstore_ps(crow + 8, m1, acc1[r]);
    }
  }
}

template <bool Full>
void dispatch_tile(int mr, int depth, const float* a, std::ptrdiff_t rs, std::ptrdiff_t cs,
                   const float* b, int ldb, float* c, int ldc, int nr, bool load_c) {
  switch (mr) {
    case 6: micro_tile<6, Full>(depth, a, rs, cs, b, ldb, c, ldc, nr, load_c); break;
    case 5: micro_tile<5, Full>(depth, a, rs, cs, b, ldb, c, ldc, nr, load_c); break;
    case 4: micro_tile<4, Full>(depth, a, rs, cs, b, ldb, c, ldc, nr, load_c); break;
    case 3: micro_tile<3, Full>(depth, a, rs, cs, b, ldb, c, ldc, nr, load_c); break;
    case 2: micro_tile<2, Full>(depth, a, rs, cs, b, ldb, c, ldc, nr, load_c); break;
    default: micro_tile<1, Full>(depth, a, rs, cs, b, ldb, c, ldc, nr, load_c); break;
  }
}

// C[rows x n] (+)= op(A)[rows x depth] * B[depth x n]
void blocked_gemm(int rows, int n, int depth, const float* a, std::ptrdiff_t rs,
                  std::ptrdiff_t cs, const float* b, int ldb, float* c, int ldc,
                  bool accumulate) {
  if (depth == 0) {
    if (!accumulate) reference::zero_block(rows, n, c, ldc);
    return;
  }
  for (int d0 = 0; d0 < depth; d0 += kDepthBlock) {
    const int dc = std::min(kDepthBlock, depth - d0);
    const bool load_c = accumulate || d0 > 0;
    for (int i0 = 0; i0 < rows; i0 += kRowTile) {
      const int mr = std::min(kRowTile, rows - i0);
      const float* ablk = a + i0 * rs + d0 * cs;
      for (int j0 = 0; j0 < n; j0 += kColTile) {
        const int nr = std::min(kColTile, n - j0);
        const float* bblk = b + static_cast<std::ptrdiff_t>(d0) * ldb + j0;
        float* cblk = c + static_cast<std::ptrdiff_t>(i0) * ldc + j0;
        if (nr == kColTile) {
          dispatch_tile<true>(mr, dc, ablk, rs, cs, bblk, ldb, cblk, ldc, nr, load_c);
        } else {
          dispatch_tile<false>(mr, dc, ablk, rs, cs, bblk, ldb, cblk, ldc, nr, load_c);
        }
      }
    }
  }
}

void gemm_nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  blocked_gemm(m, n, k, a, lda, 1, b, ldb, c, ldc, accumulate);
}

void gemm_tn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  blocked_gemm(k, n, m, a, 1, lda, b, ldb, c, ldc, accumulate);
}

void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  const int kv = k / 8 * 8;
  const __m256i tail = lane_mask(k - kv);
  int j = 0;
  for (; j + 4 <= n; j += 4) {
    const float* b0 = b + static_cast<std::ptrdiff_t>(j) * ldb;
    const float* b1 = b0 + ldb;
    const float* b2 = b1 + ldb;
    const float* b3 = b2 + ldb;
    for (int i = 0; i < m; ++i) {
      const float* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
      __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
      __m256 s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
      for (int p = 0; p < kv; p += 8) {
        const __m256 av = _mm256_loadu_ps(arow + p);
        s0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), s0);
        s1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), s1);
        s2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + p), s2);
        s3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + p), s3);
      }
      if (kv < k) {
        const __m256 av = _mm256_maskload_ps(arow + kv, tail);
        s0 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b0 + kv, tail), s0);
        s1 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b1 + kv, tail), s1);
        s2 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b2 + kv, tail), s2);
        s3 = _mm256_fmadd_ps(av, _mm256_maskload_ps(b3 + kv, tail), s3);
      }
      float* crow = c + static_cast<std::ptrdiff_t>(i) * ldc + j;
      const float r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      if (accumulate) {
        crow[0] += r0; crow[1] += r1; crow[2] += r2; crow[3] += r3;
      } else {
        crow[0] = r0; crow[1] = r1; crow[2] = r2; crow[3] = r3;
      }
    }
  }
  for (; j < n; ++j) {
    const float* brow = b + static_cast<std::ptrdiff_t>(j) * ldb;
    for (int i = 0; i < m; ++i) {
      const float* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
      __m256 s = _mm256_setzero_ps();
      for (int p = 0; p < kv; p += 8) {
        s = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p), _mm256_loadu_ps(brow + p), s);
      }
      if (kv < k) {
        s = _mm256_fmadd_ps(_mm256_maskload_ps(arow + kv, tail),
                            _mm256_maskload_ps(brow + kv, tail), s);
      }
      float& out = c[static_cast<std::ptrdiff_t>(i) * ldc + j];
      out = accumulate ? out + hsum(s) : hsum(s);
    }
  }
}

void magnitude(const float* interleaved, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256 v = _mm256_loadu_ps(interleaved + 2 * i);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    // hadd yields (c0, c2, c1, c3); the permute restores order.
    const __m256d sums = _mm256_hadd_pd(_mm256_mul_pd(lo, lo), _mm256_mul_pd(hi, hi));
    const __m256d ordered = _mm256_permute4x64_pd(sums, 0b11011000);
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(ordered));
  }
  reference::magnitude(interleaved + 2 * i, out + i, n - i);
}

float dot(const float* x, const float* y, std::size_t n) {
  __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), s0);
    s1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), s1);
  }
  float s = hsum(_mm256_add_ps(s0, s1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

namespace detail {

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::Avx2, &gemm_nn, &gemm_tn, &gemm_nt,
                                 &magnitude, &dot,    &axpy};
  return &table;
}

bool cpu_has_avx2_fma() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace detail
}  // namespace csiarm::simd

#else

namespace csiarm::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
bool cpu_has_avx2_fma() { return false; }
}  // namespace csiarm::simd::detail

#endif
