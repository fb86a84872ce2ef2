#include "mspi/msdyn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mspi/errors.hpp"
#include "mspi/kernels.hpp"

namespace mspi {

namespace {

// Symmetric square root factor of a PSD matrix.
Matrix psd_sqrt(const SymMat& s, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat());
  const Vector& ev = es.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol) throw DimensionError(std::string(what) + ": target moment is not PSD");
  const Vector root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

NoiseSpec make_ellipsoid_noise(const SymMat& v_moment) {
  const int d = v_moment.dim();
  Matrix scale = std::sqrt(static_cast<double>(d) + 2.0) * psd_sqrt(v_moment, "ellipsoid noise");
  return EllipsoidNoise{v_moment, std::move(scale)};
}

NoiseSpec make_gaussian_noise(const Vector& mean, const SymMat& cov) {
  if (mean.size() != cov.dim()) throw DimensionError("gaussian noise: mean/cov size mismatch");
  return GaussianNoise{mean, cov, psd_sqrt(cov, "gaussian noise")};
}

NoiseSpec make_table_noise(std::vector<Vector> values, std::vector<double> probabilities) {
  if (values.empty() || values.size() != probabilities.size()) {
    throw DimensionError("table noise: need one probability per value");
  }
  const auto d = values.front().size();
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k].size() != d) throw DimensionError("table noise: inconsistent value sizes");
    if (!(probabilities[k] >= 0.0)) throw DimensionError("table noise: negative probability");
    total += probabilities[k];
  }
  if (std::abs(total - 1.0) > 1e-9) throw DimensionError("table noise: probabilities must sum to 1");
  return TableNoise{std::move(values), std::move(probabilities)};
}

int noise_dim(const NoiseSpec& spec) {
  return std::visit(overloaded{
                        [](const EllipsoidNoise& e) { return e.v_moment.dim() + 1; },
                        [](const GaussianNoise& g) { return static_cast<int>(g.mean.size()); },
                        [](const TableNoise& t) { return static_cast<int>(t.values.front().size()); },
                    },
                    spec);
}

SymMat second_moment(const NoiseSpec& spec) {
  return std::visit(overloaded{
                        [](const EllipsoidNoise& e) {
                          const int d = e.v_moment.dim();
                          Matrix w = Matrix::Zero(d + 1, d + 1);
                          w(0, 0) = 1.0;
                          w.bottomRightCorner(d, d) = e.v_moment.mat();
                          return SymMat(std::move(w));
                        },
                        [](const GaussianNoise& g) {
                          return SymMat(Matrix(g.cov.mat() + g.mean * g.mean.transpose()));
                        },
                        [](const TableNoise& t) {
                          const auto d = t.values.front().size();
                          Matrix w = Matrix::Zero(d, d);
                          for (std::size_t k = 0; k < t.values.size(); ++k) {
                            w += t.probabilities[k] * t.values[k] * t.values[k].transpose();
                          }
                          return SymMat(std::move(w));
                        },
                    },
                    spec);
}

void sample_noise(const NoiseSpec& spec, Rng& rng, Vector& w) {
  std::visit(overloaded{
                 [&](const EllipsoidNoise& e) {
                   const int d = e.v_moment.dim();
                   w[0] = 1.0;
                   uniform_in_ball(d, 1.0, rng, w.data() + 1);
                   w.tail(d) = e.scale * w.tail(d);
                 },
                 [&](const GaussianNoise& g) {
                   w = g.mean + g.chol * standard_normal(static_cast<int>(g.mean.size()), rng);
                 },
                 [&](const TableNoise& t) {
                   std::discrete_distribution<std::size_t> pick(t.probabilities.begin(), t.probabilities.end());
                   w = t.values[pick(rng)];
                 },
             },
             spec);
}

Vector sample_noise(const NoiseSpec& spec, Rng& rng) {
  Vector w(noise_dim(spec));
  sample_noise(spec, rng, w);
  return w;
}

CpOperator::CpOperator(int nx, int nu, Matrix m) : n_x(nx), n_u(nu), M(std::move(m)) {
  if (M.rows() != sd(n_x) || M.cols() != sd(n_x + n_u)) {
    throw DimensionError("CpOperator: expected " + std::to_string(sd(n_x)) + "x" + std::to_string(sd(n_x + n_u)) +
                         " matrix");
  }
}

SymMat CpOperator::apply(const SymMat& z) const {
  if (z.dim() != n_z()) throw DimensionError("CpOperator::apply: dimension mismatch");
  return unsvec(Vector(M * svec(z).data));
}

SymMat CpOperator::adjoint(const SymMat& p) const {
  if (p.dim() != n_x) throw DimensionError("CpOperator::adjoint: dimension mismatch");
  return unsvec(Vector(M.transpose() * svec(p).data));
}

MsSystem::MsSystem(std::vector<Mode> modes, NoiseSpec noise, SymMat W)
    : modes_(std::move(modes)), noise_(std::move(noise)), W_(std::move(W)) {
  if (modes_.empty()) throw DimensionError("MsSystem: need at least one mode");
  n_x_ = static_cast<int>(modes_.front().A.rows());
  n_u_ = static_cast<int>(modes_.front().B.cols());
  if (n_x_ < 1 || n_u_ < 1) throw DimensionError("MsSystem: empty state or input dimension");
  for (const Mode& m : modes_) {
    if (m.A.rows() != n_x_ || m.A.cols() != n_x_ || m.B.rows() != n_x_ || m.B.cols() != n_u_) {
      throw DimensionError("MsSystem: inconsistent mode dimensions");
    }
    Matrix s(n_x_, n_x_ + n_u_);
    s << m.A, m.B;
    stacked_rows_.emplace_back(s);
    stacked_.push_back(std::move(s));
  }
  if (W_.dim() != n_w()) throw DimensionError("MsSystem: W must be n_w x n_w");
  if (noise_dim(noise_) != n_w()) throw DimensionError("MsSystem: noise dimension differs from mode count");
  if (!is_psd(W_, 1e-12)) throw DimensionError("MsSystem: W is not PSD");
  op_ = operator_matrix(*this);
}

MsSystem MsSystem::from_noise(std::vector<Mode> modes, NoiseSpec noise) {
  SymMat W = second_moment(noise);
  return MsSystem(std::move(modes), std::move(noise), std::move(W));
}

Vector step(const MsSystem& sys, const Vector& x, const Vector& u, const Vector& w) {
  if (x.size() != sys.n_x() || u.size() != sys.n_u() || w.size() != sys.n_w()) {
    throw DimensionError("step: dimension mismatch");
  }
  Vector next = Vector::Zero(sys.n_x());
  for (int l = 0; l < sys.n_w(); ++l) {
    if (w[l] == 0.0) continue;
    const Mode& m = sys.modes()[static_cast<std::size_t>(l)];
    next += w[l] * (m.A * x + m.B * u);
  }
  return next;
}

void step_into(const MsSystem& sys, const double* z, const double* w, double* scratch, double* next) {
  const kernels::KernelSet& k = kernels::active_kernels();
  const auto nx = static_cast<std::size_t>(sys.n_x());
  const auto nz = static_cast<std::size_t>(sys.n_z());
  std::fill(next, next + nx, 0.0);
  for (int l = 0; l < sys.n_w(); ++l) {
    if (w[l] == 0.0) continue;
    k.gemv(nx, nz, sys.stacked_rows(l).data(), z, scratch);
    k.axpy(nx, w[l], scratch, next);
  }
}

SymMat apply_E(const MsSystem& sys, const SymMat& z) {
  if (z.dim() != sys.n_z()) throw DimensionError("apply_E: dimension mismatch");
  const int nw = sys.n_w();
  std::vector<Matrix> right;  // Z [A_j, B_j]^T
  right.reserve(static_cast<std::size_t>(nw));
  for (int j = 0; j < nw; ++j) right.push_back(z.mat() * sys.stacked(j).transpose());
  Matrix out = Matrix::Zero(sys.n_x(), sys.n_x());
  for (int i = 0; i < nw; ++i) {
    Matrix acc = Matrix::Zero(sys.n_z(), sys.n_x());
    for (int j = 0; j < nw; ++j) {
      if (sys.W()(i, j) != 0.0) acc += sys.W()(i, j) * right[static_cast<std::size_t>(j)];
    }
    out += sys.stacked(i) * acc;
  }
  return SymMat(std::move(out));
}

SymMat apply_E_adjoint(const MsSystem& sys, const SymMat& p) {
  if (p.dim() != sys.n_x()) throw DimensionError("apply_E_adjoint: dimension mismatch");
  const int nw = sys.n_w();
  std::vector<Matrix> right;  // P [A_j, B_j]
  right.reserve(static_cast<std::size_t>(nw));
  for (int j = 0; j < nw; ++j) right.push_back(p.mat() * sys.stacked(j));
  Matrix out = Matrix::Zero(sys.n_z(), sys.n_z());
  for (int i = 0; i < nw; ++i) {
    Matrix acc = Matrix::Zero(sys.n_x(), sys.n_z());
    for (int j = 0; j < nw; ++j) {
      if (sys.W()(i, j) != 0.0) acc += sys.W()(i, j) * right[static_cast<std::size_t>(j)];
    }
    out += sys.stacked(i).transpose() * acc;
  }
  return SymMat(std::move(out));
}

SymMat sampled_E(const MsSystem& sys, const SymMat& z, const Vector& w) {
  if (z.dim() != sys.n_z() || w.size() != sys.n_w()) throw DimensionError("sampled_E: dimension mismatch");
  Matrix s = Matrix::Zero(sys.n_x(), sys.n_z());
  for (int l = 0; l < sys.n_w(); ++l) s += w[l] * sys.stacked(l);
  return SymMat(Matrix(s * z.mat() * s.transpose()));
}

CpOperator operator_matrix(const MsSystem& sys) {
  const int nz = sys.n_z();
  Matrix m(sd(sys.n_x()), sd(nz));
  Vector e = Vector::Zero(sd(nz));
  for (int k = 0; k < sd(nz); ++k) {
    e.setZero();
    e[k] = 1.0;
    m.col(k) = svec(apply_E(sys, unsvec(e))).data;
  }
  return CpOperator(sys.n_x(), sys.n_u(), std::move(m));
}

Matrix closed_loop_matrix(const CpOperator& op, const Policy& pol) {
  if (pol.n_x() != op.n_x || pol.n_u() != op.n_u) throw DimensionError("closed_loop_matrix: gain shape mismatch");
  Matrix lift(op.n_z(), op.n_x);
  lift << Matrix::Identity(op.n_x, op.n_x), pol.K;
  return op.M * congruence_matrix(lift);
}

double spectral_radius(const Matrix& m) {
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_ms_stabilizing(const CpOperator& op, const Policy& pol) {
  if (!pol.finite()) return false;
  return spectral_radius(closed_loop_matrix(op, pol)) < 1.0 - 1e-9;
}

}  // namespace mspi
