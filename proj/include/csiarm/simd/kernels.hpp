// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops used by the pipeline and the network. Each kernel
// has a portable scalar reference and, where the target supports it, an AVX2
// (x86-64) or NEON (AArch64) variant. The variant is picked once at runtime
// from the CPU feature bits; CSIARM_SIMD=scalar|avx2|neon overrides it.
//
// All matrices are row-major with explicit leading dimensions.
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace csiarm::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;

  // C[MxN] (+)= A[MxK] * B[KxN]
  void (*gemm_nn)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc, bool accumulate);
  // C[KxN] (+)= A[MxK]^T * B[MxN]; the reduction runs over the M rows.
  void (*gemm_tn)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc, bool accumulate);
  // C[MxN] (+)= A[MxK] * B[NxK]^T
  void (*gemm_nt)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc, bool accumulate);

  // out[i] = sqrt(re^2 + im^2) over n interleaved (re, im) float pairs, in double.
  void (*magnitude)(const float* interleaved, double* out, std::size_t n);

  float (*dot)(const float* x, const float* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
};

/// Kernel table chosen for this process.
const KernelTable& active();

const KernelTable& scalar_table();

/// Tables that were compiled in and are usable on this CPU, scalar first.
std::vector<const KernelTable*> available_tables();

/// Overrides the runtime choice. Returns false when the ISA is unavailable.
bool select(Isa isa);

namespace detail {
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();
bool cpu_has_avx2_fma();
}  // namespace detail

}  // namespace csiarm::simd
