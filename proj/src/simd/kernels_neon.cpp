// SPDX-License-Identifier: Apache-2.0
//
// NEON kernels for AArch64, where Advanced SIMD is part of the baseline ISA.
#include "csiarm/simd/kernels.hpp"
#include "csiarm/simd/reference.hpp"

#include <algorithm>
#include <cstddef>

#if defined(__aarch64__)
#include <arm_neon.h>

namespace csiarm::simd {
namespace {

constexpr int kRowTile = 4;
constexpr int kColTile = 8;
constexpr int kDepthBlock = 256;

// MR x 8 register tile; A element (r, p) at a[r * rs + p * cs].
template <int MR>
void micro_tile(int depth, const float* a, std::ptrdiff_t rs, std::ptrdiff_t cs, const float* b,
                int ldb, float* c, int ldc, bool load_c) {
  float32x4_t acc0[MR];
  float32x4_t acc1[MR];
  for (int r = 0; r < MR; ++r) {
    if (load_c) {
      acc0[r] = vld1q_f32(c + r * ldc);
      acc1[r] = vld1q_f32(c + r * ldc + 4);
    } else {
      acc0[r] = vdupq_n_f32(0.0f);
      acc1[r] = vdupq_n_f32(0.0f);
    }
  }
  for (int p = 0; p < depth; ++p) {
    const float* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
    const float32x4_t b0 = vld1q_f32(brow);
    const float32x4_t b1 = vld1q_f32(brow + 4);
    const float* acol = a + p * cs;
    for (int r = 0; r < MR; ++r) {
      const float av = acol[r * rs];
      acc0[r] = vfmaq_n_f32(acc0[r], b0, av);
      acc1[r] = vfmaq_n_f32(acc1[r], b1, av);
    }
  }
  for (int r = 0; r < MR; ++r) {
    vst1q_f32(c + r * ldc, acc0[r]);
    vst1q_f32(c + r * ldc + 4, acc1[r]);
  }
}

// Column tails narrower than the tile fall back to scalar code.
void edge_tile(int mr, int nr, int depth, const float* a, std::ptrdiff_t rs, std::ptrdiff_t cs,
               const float* b, int ldb, float* c, int ldc, bool load_c) {
  for (int r = 0; r < mr; ++r) {
    for (int j = 0; j < nr; ++j) {
      float s = load_c ? c[r * ldc + j] : 0.0f;
      for (int p = 0; p < depth; ++p) s += a[r * rs + p * cs] * b[static_cast<std::ptrdiff_t>(p) * ldb + j];
      c[r * ldc + j] = s;
    }
  }
}

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
        if (nr < kColTile) {
          edge_tile(mr, nr, dc, ablk, rs, cs, bblk, ldb, cblk, ldc, load_c);
          continue;
        }
        switch (mr) {
          case 4: micro_tile<4>(dc, ablk, rs, cs, bblk, ldb, cblk, ldc, load_c); break;
          case 3: micro_tile<3>(dc, ablk, rs, cs, bblk, ldb, cblk, ldc, load_c); break;
          case 2: micro_tile<2>(dc, ablk, rs, cs, bblk, ldb, cblk, ldc, load_c); break;
          default: micro_tile<1>(dc, ablk, rs, cs, bblk, ldb, cblk, ldc, load_c); break;
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

float dot(const float* x, const float* y, std::size_t n) {
  float32x4_t s0 = vdupq_n_f32(0.0f), s1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = vfmaq_f32(s0, vld1q_f32(x + i), vld1q_f32(y + i));
    s1 = vfmaq_f32(s1, vld1q_f32(x + i + 4), vld1q_f32(y + i + 4));
  }
  float s = vaddvq_f32(vaddq_f32(s0, s1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const float s = dot(arow, b + static_cast<std::ptrdiff_t>(j) * ldb, static_cast<std::size_t>(k));
      float& out = c[static_cast<std::ptrdiff_t>(i) * ldc + j];
      out = accumulate ? out + s : s;
    }
  }
}

void magnitude(const float* interleaved, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float32x4_t v = vld1q_f32(interleaved + 2 * i);
    const float64x2_t c0 = vcvt_f64_f32(vget_low_f32(v));
    const float64x2_t c1 = vcvt_high_f64_f32(v);
    const float64x2_t sums = vpaddq_f64(vmulq_f64(c0, c0), vmulq_f64(c1, c1));
    vst1q_f64(out + i, vsqrtq_f64(sums));
  }
  reference::magnitude(interleaved + 2 * i, out + i, n - i);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_n_f32(vld1q_f32(y + i), vld1q_f32(x + i), alpha));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

namespace detail {
const KernelTable* neon_table() {
  static const KernelTable table{Isa::Neon, &gemm_nn, &gemm_tn, &gemm_nt,
                                 &magnitude, &dot,    &axpy};
  return &table;
}
}  // namespace detail
}  // namespace csiarm::simd

#else

namespace csiarm::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace csiarm::simd::detail

#endif
