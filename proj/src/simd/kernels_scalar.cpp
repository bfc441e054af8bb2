// SPDX-License-Identifier: Apache-2.0
#include "csiarm/simd/kernels.hpp"
#include "csiarm/simd/reference.hpp"

namespace csiarm::simd {
namespace {

void gemm_nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  reference::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_tn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  reference::gemm_tn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  reference::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

float dot(const float* x, const float* y, std::size_t n) { return reference::dot(x, y, n); }

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  reference::axpy(alpha, x, y, n);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, &gemm_nn, &gemm_tn, &gemm_nt,
                                 &reference::magnitude, &dot, &axpy};
  return table;
}

}  // namespace csiarm::simd
