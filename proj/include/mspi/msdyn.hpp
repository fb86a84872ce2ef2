#pragma once

// Linear systems with state- and input-multiplicative noise
//
//   x+ = (sum_l A_l w_l) x + (sum_l B_l w_l) u,   w i.i.d., E[w w^T] = W,
//
// their second-moment operator E(Z) = sum_ij W_ij [A_i,B_i] Z [A_j,B_j]^T on
// augmented moments Z = E[z z^T], z = (x, u), and mean-square stability.

#include <variant>
#include <vector>

#include "mspi/rng.hpp"
#include "mspi/symcalc.hpp"

namespace mspi {

/// Feedback gain u = K x, K is n_u x n_x.
struct Policy {
  Matrix K;

  int n_u() const { return static_cast<int>(K.rows()); }
  int n_x() const { return static_cast<int>(K.cols()); }
  bool finite() const { return K.allFinite(); }
};

/// w = (1, v) with v uniform on the solid ellipsoid whose second moment is
/// `v_moment`. Uniform on the unit ball in R^d has second moment I/(d+2), so
/// v = sqrt(d+2) * v_moment^{1/2} * u with u uniform in the unit ball.
struct EllipsoidNoise {
  SymMat v_moment;
  Matrix scale;  // sqrt(d+2) * v_moment^{1/2}
};

/// w ~ N(mean, cov).
struct GaussianNoise {
  Vector mean;
  SymMat cov;
  Matrix chol;  // lower Cholesky-like factor of cov (via eigen decomposition, PSD allowed)
};

/// w drawn from a finite table with given probabilities.
struct TableNoise {
  std::vector<Vector> values;
  std::vector<double> probabilities;
};

using NoiseSpec = std::variant<EllipsoidNoise, GaussianNoise, TableNoise>;

/// Throws DimensionError if `v_moment` is not PSD.
NoiseSpec make_ellipsoid_noise(const SymMat& v_moment);
NoiseSpec make_gaussian_noise(const Vector& mean, const SymMat& cov);
NoiseSpec make_table_noise(std::vector<Vector> values, std::vector<double> probabilities);

int noise_dim(const NoiseSpec& spec);

/// Exact E[w w^T] of the noise distribution.
SymMat second_moment(const NoiseSpec& spec);

Vector sample_noise(const NoiseSpec& spec, Rng& rng);
/// In-place form; `w` must already have noise_dim(spec) entries.
void sample_noise(const NoiseSpec& spec, Rng& rng, Vector& w);

struct Mode {
  Matrix A;  // n_x x n_x
  Matrix B;  // n_x x n_u
};

/// Matrix representation, in svec coordinates, of a linear map
/// sym(n_x + n_u) -> sym(n_x). Used both for the true moment operator and
/// for data-driven estimates of it.
struct CpOperator {
  int n_x = 0;
  int n_u = 0;
  Matrix M;  // sd(n_x) x sd(n_x + n_u)

  CpOperator() = default;
  CpOperator(int nx, int nu, Matrix m);

  int n_z() const { return n_x + n_u; }
  SymMat apply(const SymMat& z) const;
  /// The adjoint in trace inner product; svec is an isometry so this is M^T.
  SymMat adjoint(const SymMat& p) const;
};

class MsSystem {
 public:
  /// Throws DimensionError on inconsistent shapes or a non-PSD W.
  MsSystem(std::vector<Mode> modes, NoiseSpec noise, SymMat W);

  /// W taken as the exact second moment of `noise`.
  static MsSystem from_noise(std::vector<Mode> modes, NoiseSpec noise);

  int n_x() const { return n_x_; }
  int n_u() const { return n_u_; }
  int n_z() const { return n_x_ + n_u_; }
  int n_w() const { return static_cast<int>(modes_.size()); }

  const std::vector<Mode>& modes() const { return modes_; }
  const NoiseSpec& noise() const { return noise_; }
  const SymMat& W() const { return W_; }
  /// [A_l, B_l], n_x x n_z
  const Matrix& stacked(int l) const { return stacked_[static_cast<std::size_t>(l)]; }
  /// Row-major copy of stacked(l) for the kernel layer.
  const RowMatrix& stacked_rows(int l) const { return stacked_rows_[static_cast<std::size_t>(l)]; }
  const CpOperator& op() const { return op_; }

 private:
  std::vector<Mode> modes_;
  NoiseSpec noise_;
  SymMat W_;
  std::vector<Matrix> stacked_;
  std::vector<RowMatrix> stacked_rows_;
  int n_x_ = 0;
  int n_u_ = 0;
  CpOperator op_;
};

Vector step(const MsSystem& sys, const Vector& x, const Vector& u, const Vector& w);

/// Allocation-free step for the rollout loop: next = sum_l w_l [A_l, B_l] z.
/// `scratch` and `next` hold n_x doubles, `z` holds n_z and `w` holds n_w.
void step_into(const MsSystem& sys, const double* z, const double* w, double* scratch, double* next);

SymMat apply_E(const MsSystem& sys, const SymMat& z);
SymMat apply_E_adjoint(const MsSystem& sys, const SymMat& p);

/// E with W replaced by the realized w w^T.
SymMat sampled_E(const MsSystem& sys, const SymMat& z, const Vector& w);

/// M with svec(apply_E(Z)) == M svec(Z), assembled from the svec basis.
CpOperator operator_matrix(const MsSystem& sys);

/// T_K with svec(E(pi_K(X))) == T_K svec(X).
Matrix closed_loop_matrix(const CpOperator& op, const Policy& pol);
inline Matrix closed_loop_matrix(const MsSystem& sys, const Policy& pol) { return closed_loop_matrix(sys.op(), pol); }

double spectral_radius(const Matrix& m);

/// rho(T_K) < 1 - 1e-9. False for non-finite gains.
bool is_ms_stabilizing(const CpOperator& op, const Policy& pol);
inline bool is_ms_stabilizing(const MsSystem& sys, const Policy& pol) { return is_ms_stabilizing(sys.op(), pol); }

}  // namespace mspi
