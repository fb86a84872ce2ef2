// NEON kernels (aarch64). Two doubles per lane group; no fused multiply-add
// so elementwise kernels match the scalar reference bit for bit.

#include <arm_neon.h>

#include <cmath>

#include "mspi/kernels.hpp"

namespace mspi::kernels {
namespace {

double dot_neon(std::size_t n, const double* a, const double* b) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_neon(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = dot_neon(cols, S + i * cols, x);
}

void axpy_neon(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(a, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_t_neon(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) axpy_neon(cols, x[i], S + i * cols, y);
}

void ger_sub_neon(std::size_t rows, std::size_t cols, double* S, const double* u, const double* v) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = S + i * cols;
    const float64x2_t ui = vdupq_n_f64(u[i]);
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) vst1q_f64(row + j, vsubq_f64(vld1q_f64(row + j), vmulq_f64(ui, vld1q_f64(v + j))));
    for (; j < cols; ++j) row[j] -= u[i] * v[j];
  }
}

void svec_outer_neon(std::size_t n, const double* z, double* out) {
  const double r2 = std::sqrt(2.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[k++] = z[i] * z[i];
    const double zi_s = r2 * z[i];
    const float64x2_t zi = vdupq_n_f64(zi_s);
    std::size_t j = i + 1;
    for (; j + 2 <= n; j += 2, k += 2) vst1q_f64(out + k, vmulq_f64(zi, vld1q_f64(z + j)));
    for (; j < n; ++j) out[k++] = zi_s * z[j];
  }
}

}  // namespace

const KernelSet* neon_kernels() {
  static const KernelSet set{"neon",       dot_neon,  gemv_neon,      gemv_t_neon,
                             ger_sub_neon, axpy_neon, svec_outer_neon};
  return &set;
}

}  // namespace mspi::kernels
