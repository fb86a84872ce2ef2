#pragma once

// Symmetric-matrix utilities: symmetrized vectorization (svec), block
// partitioning of augmented moments and PSD checks.
//
// svec ordering is row-major over the upper triangle with off-diagonal
// entries scaled by sqrt(2):
//
//   svec(X) = (X11, r2*X12, ..., r2*X1n, X22, r2*X23, ..., Xnn)
//
// so that <svec(X), svec(Y)> = tr[XY].

#include <Eigen/Dense>

namespace mspi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Number of free entries of an n x n symmetric matrix, n(n+1)/2.
constexpr int sd(int n) { return n * (n + 1) / 2; }

/// Dense symmetric matrix. Construction rejects inputs whose asymmetry
/// exceeds 1e-12 relative and symmetrizes the rest.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(const Matrix& m);
  explicit SymMat(Matrix&& m);

  static SymMat zero(int n) { return SymMat(Matrix::Zero(n, n), Trusted{}); }
  static SymMat identity(int n) { return SymMat(Matrix::Identity(n, n), Trusted{}); }
  static SymMat diagonal(const Vector& d) { return SymMat(Matrix(d.asDiagonal()), Trusted{}); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }  // Frobenius

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator*(double s) const;
  friend SymMat operator*(double s, const SymMat& x) { return x * s; }

 private:
  struct Trusted {};
  SymMat(Matrix m, Trusted) : m_(std::move(m)) {}
  void check_and_symmetrize();

  Matrix m_;
};

/// svec coordinates of a symmetric matrix of side `dim`.
struct SvecVector {
  int dim = 0;
  Vector data;
};

SvecVector svec(const SymMat& x);

/// Inverse of svec. Throws DimensionError when the length is not triangular.
SymMat unsvec(const Vector& v);
inline SymMat unsvec(const SvecVector& v) { return unsvec(v.data); }

/// Partition of an augmented (n_x + n_u) symmetric matrix.
struct Blocks {
  SymMat xx;
  Matrix ux;  // n_u x n_x, lower-left
  SymMat uu;
};

Blocks blocks(const SymMat& z, int n_x, int n_u);

/// z z^T
SymMat outer(const Vector& z);

/// lambda_min(X) >= -tol * max(1, ||X||_2)
bool is_psd(const SymMat& x, double tol = 1e-9);

/// Smallest eigenvalue.
double min_eigenvalue(const SymMat& x);

/// Matrix of the linear map svec(X) -> svec(S X S^T) for S of shape m x n.
Matrix congruence_matrix(const Matrix& s);

}  // namespace mspi
