// AVX2 kernels. This file is the only one compiled with -mavx2; FMA is left
// off so that elementwise kernels round exactly like the scalar reference.

#include <immintrin.h>

#include <cmath>

#include "mspi/kernels.hpp"

namespace mspi::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(std::size_t n, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_avx2(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = dot_avx2(cols, S + i * cols, x);
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(a, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_t_avx2(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) axpy_avx2(cols, x[i], S + i * cols, y);
}

void ger_sub_avx2(std::size_t rows, std::size_t cols, double* S, const double* u, const double* v) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = S + i * cols;
    const __m256d ui = _mm256_set1_pd(u[i]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d r = _mm256_loadu_pd(row + j);
      _mm256_storeu_pd(row + j, _mm256_sub_pd(r, _mm256_mul_pd(ui, _mm256_loadu_pd(v + j))));
    }
    for (; j < cols; ++j) row[j] -= u[i] * v[j];
  }
}

void svec_outer_avx2(std::size_t n, const double* z, double* out) {
  const double r2 = std::sqrt(2.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[k++] = z[i] * z[i];
    const double zi_s = r2 * z[i];
    const __m256d zi = _mm256_set1_pd(zi_s);
    std::size_t j = i + 1;
    for (; j + 4 <= n; j += 4, k += 4) {
      _mm256_storeu_pd(out + k, _mm256_mul_pd(zi, _mm256_loadu_pd(z + j)));
    }
    for (; j < n; ++j) out[k++] = zi_s * z[j];
  }
}

}  // namespace

const KernelSet* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelSet set{"avx2",       dot_avx2,  gemv_avx2,      gemv_t_avx2,
                             ger_sub_avx2, axpy_avx2, svec_outer_avx2};
  return supported ? &set : nullptr;
}

}  // namespace mspi::kernels
