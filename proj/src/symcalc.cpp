#include "mspi/symcalc.hpp"

#include <cmath>
#include <string>

#include "mspi/errors.hpp"

namespace mspi {

namespace {
constexpr double kSymmetryTol = 1e-12;
const double kSqrt2 = std::sqrt(2.0);
}  // namespace

SymMat::SymMat(const Matrix& m) : m_(m) { check_and_symmetrize(); }
SymMat::SymMat(Matrix&& m) : m_(std::move(m)) { check_and_symmetrize(); }

void SymMat::check_and_symmetrize() {
  if (m_.rows() != m_.cols() || m_.rows() < 1) {
    throw DimensionError("SymMat: expected a non-empty square matrix, got " + std::to_string(m_.rows()) + "x" +
                         std::to_string(m_.cols()));
  }
  const double scale = m_.cwiseAbs().maxCoeff();
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    throw DimensionError("SymMat: input is not symmetric (relative asymmetry " + std::to_string(asym / scale) + ")");
  }
  m_ = 0.5 * (m_ + m_.transpose()).eval();
}

SymMat SymMat::operator+(const SymMat& o) const {
  if (o.dim() != dim()) throw DimensionError("SymMat: dimension mismatch in +");
  return SymMat(Matrix(m_ + o.m_), Trusted{});
}

SymMat SymMat::operator-(const SymMat& o) const {
  if (o.dim() != dim()) throw DimensionError("SymMat: dimension mismatch in -");
  return SymMat(Matrix(m_ - o.m_), Trusted{});
}

SymMat SymMat::operator*(double s) const { return SymMat(Matrix(m_ * s), Trusted{}); }

SvecVector svec(const SymMat& x) {
  const int n = x.dim();
  SvecVector out{n, Vector(sd(n))};
  int k = 0;
  for (int i = 0; i < n; ++i) {
    out.data[k++] = x(i, i);
    for (int j = i + 1; j < n; ++j) out.data[k++] = kSqrt2 * x(i, j);
  }
  return out;
}

SymMat unsvec(const Vector& v) {
  const auto len = v.size();
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  if (n < 1 || sd(n) != len) {
    throw DimensionError("unsvec: length " + std::to_string(len) + " is not a triangular number");
  }
  Matrix m(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    m(i, i) = v[k++];
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = m(j, i) = v[k++] / kSqrt2;
    }
  }
  return SymMat(std::move(m));
}

Blocks blocks(const SymMat& z, int n_x, int n_u) {
  if (n_x < 1 || n_u < 1 || z.dim() != n_x + n_u) {
    throw DimensionError("blocks: matrix of dim " + std::to_string(z.dim()) + " cannot be split into " +
                         std::to_string(n_x) + "+" + std::to_string(n_u));
  }
  const Matrix& m = z.mat();
  return Blocks{SymMat(Matrix(m.topLeftCorner(n_x, n_x))), m.bottomLeftCorner(n_u, n_x),
                SymMat(Matrix(m.bottomRightCorner(n_u, n_u)))};
}

SymMat outer(const Vector& z) {
  if (z.size() < 1) throw DimensionError("outer: empty vector");
  return SymMat(Matrix(z * z.transpose()));
}

double min_eigenvalue(const SymMat& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const SymMat& x, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x.mat(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double spectral = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -tol * std::max(1.0, spectral);
}

Matrix congruence_matrix(const Matrix& s) {
  const int n = static_cast<int>(s.cols());
  const int m = static_cast<int>(s.rows());
  Matrix out(sd(m), sd(n));
  Vector e = Vector::Zero(sd(n));
  for (int k = 0; k < sd(n); ++k) {
    e.setZero();
    e[k] = 1.0;
    const Matrix basis = unsvec(e).mat();
    out.col(k) = svec(SymMat(Matrix(s * basis * s.transpose()))).data;
  }
  return out;
}

}  // namespace mspi
