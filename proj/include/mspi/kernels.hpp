#pragma once

// Dense inner-loop kernels used by the recursive estimators.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (AVX2 on x86-64, NEON on aarch64) are selected at runtime and must agree
// with the reference to rounding; see tests/kernels_test.cpp.
//
// Matrices are row-major with leading dimension equal to the column count.

#include <cstddef>
#include <string_view>

namespace mspi::kernels {

struct KernelSet {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(std::size_t n, const double* a, const double* b);
  // y = S x, S is rows x cols
  void (*gemv)(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y);
  // y = S^T x, S is rows x cols, y has length cols
  void (*gemv_t)(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y);
  // S -= u v^T, S is rows x cols
  void (*ger_sub)(std::size_t rows, std::size_t cols, double* S, const double* u, const double* v);
  // y += alpha x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // out = svec(z z^T), out has length n(n+1)/2
  void (*svec_outer)(std::size_t n, const double* z, double* out);
};

const KernelSet& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelSet* avx2_kernels();
const KernelSet* neon_kernels();

// The kernel set used by the library. Picks the widest supported variant
// unless MSPI_SIMD=scalar is set in the environment.
const KernelSet& active_kernels();

}  // namespace mspi::kernels
