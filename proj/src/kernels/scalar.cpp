#include "mspi/kernels.hpp"

#include <cmath>

namespace mspi::kernels {
namespace {

double dot_scalar(std::size_t n, const double* a, const double* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_scalar(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = S + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

void gemv_t_scalar(std::size_t rows, std::size_t cols, const double* S, const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = S + i * cols;
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * xi;
  }
}

void ger_sub_scalar(std::size_t rows, std::size_t cols, double* S, const double* u, const double* v) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = S + i * cols;
    const double ui = u[i];
    for (std::size_t j = 0; j < cols; ++j) row[j] -= ui * v[j];
  }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void svec_outer_scalar(std::size_t n, const double* z, double* out) {
  const double r2 = std::sqrt(2.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[k++] = z[i] * z[i];
    const double zi = r2 * z[i];
    for (std::size_t j = i + 1; j < n; ++j) out[k++] = zi * z[j];
  }
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{"scalar",      dot_scalar, gemv_scalar, gemv_t_scalar,
                             ger_sub_scalar, axpy_scalar, svec_outer_scalar};
  return set;
}

}  // namespace mspi::kernels
