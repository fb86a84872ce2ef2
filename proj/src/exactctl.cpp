#include "mspi/exactctl.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mspi/errors.hpp"

namespace mspi {

namespace {

constexpr double kStrictPd = 1e-12;
constexpr double kImproveTol = 1e-10;
constexpr double kMaxCondition = 1e12;

Matrix lift_factor(const Policy& pol) {
  Matrix s(pol.n_x() + pol.n_u(), pol.n_x());
  s << Matrix::Identity(pol.n_x(), pol.n_x()), pol.K;
  return s;
}

void check_op_cost(const CpOperator& op, const CostSpec& cost) {
  if (op.n_x != cost.n_x() || op.n_u != cost.n_u()) throw DimensionError("operator and cost dimensions differ");
}

}  // namespace

CostSpec::CostSpec(SymMat Q, SymMat R) : Q_(std::move(Q)), R_(std::move(R)) {
  if (min_eigenvalue(Q_) <= kStrictPd) throw DimensionError("CostSpec: Q must be positive definite");
  if (min_eigenvalue(R_) <= kStrictPd) throw DimensionError("CostSpec: R must be positive definite");
  const int nx = Q_.dim();
  const int nu = R_.dim();
  Matrix h = Matrix::Zero(nx + nu, nx + nu);
  h.topLeftCorner(nx, nx) = Q_.mat();
  h.bottomRightCorner(nu, nu) = R_.mat();
  H_ = SymMat(std::move(h));
}

SymMat policy_lift(const Policy& pol, const SymMat& x) {
  if (x.dim() != pol.n_x()) throw DimensionError("policy_lift: dimension mismatch");
  const Matrix s = lift_factor(pol);
  return SymMat(Matrix(s * x.mat() * s.transpose()));
}

SymMat policy_adjoint(const Policy& pol, const SymMat& m) {
  if (m.dim() != pol.n_x() + pol.n_u()) throw DimensionError("policy_adjoint: dimension mismatch");
  const Matrix s = lift_factor(pol);
  return SymMat(Matrix(s.transpose() * m.mat() * s));
}

SymMat q_matrix(const CpOperator& op, const CostSpec& cost, const SymMat& P) {
  check_op_cost(op, cost);
  return cost.H() + op.adjoint(P);
}

Policy improve(const SymMat& theta, int n_x, int n_u) {
  const Blocks b = blocks(theta, n_x, n_u);
  if (!b.uu.mat().allFinite() || !(min_eigenvalue(b.uu) > kImproveTol)) throw ImprovementError();
  Eigen::LLT<Matrix> llt(b.uu.mat());
  if (llt.info() != Eigen::Success) throw ImprovementError();
  return Policy{-llt.solve(b.ux)};
}

double riccati_residual(const CpOperator& op, const CostSpec& cost, const SymMat& P) {
  check_op_cost(op, cost);
  const Blocks e = blocks(op.adjoint(P), op.n_x, op.n_u);
  const Matrix inner = cost.R().mat() + e.uu.mat();
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success || !(min_eigenvalue(SymMat(inner)) > 0.0)) {
    throw SingularError("riccati_residual: R + E*_uu(P) is not positive definite");
  }
  const Matrix rhs = cost.Q().mat() + e.xx.mat() - e.ux.transpose() * llt.solve(e.ux);
  return (P.mat() - rhs).norm();
}

ValueCertificate evaluate_policy(const CpOperator& op, const CostSpec& cost, const Policy& pol) {
  check_op_cost(op, cost);
  if (pol.n_x() != op.n_x || pol.n_u() != op.n_u) throw DimensionError("evaluate_policy: gain shape mismatch");
  if (!is_ms_stabilizing(op, pol)) throw NotStabilizingError();

  const Matrix lift = congruence_matrix(lift_factor(pol));  // sd(n_z) x sd(n_x)
  const Matrix closed = op.M * lift;                        // T_K
  const int n = sd(op.n_x);
  const Matrix system = Matrix::Identity(n, n) - closed.transpose();
  const Vector rhs = lift.transpose() * svec(cost.H()).data;

  Eigen::PartialPivLU<Matrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kMaxCondition)) {
    throw SingularError("evaluate_policy: Lyapunov system is near-singular (rcond " + std::to_string(rcond) + ")");
  }
  SymMat P = unsvec(Vector(lu.solve(rhs)));

  SymMat theta = q_matrix(op, cost, P);
  const double fixed_point = (P - policy_adjoint(pol, theta)).norm();
  if (fixed_point > 1e-9 * std::max(P.norm(), std::numeric_limits<double>::min())) {
    throw SingularError("evaluate_policy: Lyapunov solve inaccurate");
  }

  double residual = std::numeric_limits<double>::quiet_NaN();
  try {
    residual = riccati_residual(op, cost, P);
  } catch (const SingularError&) {
  }
  return ValueCertificate{std::move(P), std::move(theta), pol, residual};
}

ValueCertificate exact_policy_iteration(const CpOperator& op, const CostSpec& cost, const Policy& k_init,
                                        const PolicyIterationOptions& opts) {
  Policy k = k_init;
  ValueCertificate cert = evaluate_policy(op, cost, k);
  for (int it = 0; it < opts.max_iter; ++it) {
    Policy next = improve(cert.Theta, op.n_x, op.n_u);
    const double move = (next.K - k.K).norm();
    k = std::move(next);
    cert = evaluate_policy(op, cost, k);
    if (move <= opts.tol * std::max(1.0, k.K.norm())) return cert;
  }
  throw PolicyIterationError("exact_policy_iteration: no convergence in " + std::to_string(opts.max_iter) +
                                 " iterations",
                             std::move(cert));
}

Suboptimality relative_suboptimality(const CpOperator& op, const CostSpec& cost, const Policy& pol,
                                     const ValueCertificate& reference) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  try {
    const ValueCertificate cert = evaluate_policy(op, cost, pol);
    const double ref = reference.P.trace();
    return {(cert.P.trace() - ref) / ref, true};
  } catch (const NotStabilizingError&) {
    return {inf, false};
  } catch (const SingularError&) {
    return {inf, false};
  }
}

double relative_gain_error(const Policy& pol, const Policy& reference) {
  if (!pol.finite()) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> diff(pol.K - reference.K);
  Eigen::JacobiSVD<Matrix> ref(reference.K);
  return diff.singularValues()(0) / ref.singularValues()(0);
}

}  // namespace mspi
