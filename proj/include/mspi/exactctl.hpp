#pragma once

// Model-based control on a known (or estimated) moment operator: policy
// evaluation through the Lyapunov equation, Q-matrices, policy improvement,
// exact policy iteration and the generalized Riccati residual.
//
// Every routine takes a CpOperator so the same code serves the true system
// and certainty-equivalent synthesis from an estimate.

#include <optional>

#include "mspi/msdyn.hpp"
#include "mspi/symcalc.hpp"

namespace mspi {

/// Stage cost tr[H Z] with H = diag(Q, R); Q and R strictly positive definite.
class CostSpec {
 public:
  CostSpec(SymMat Q, SymMat R);

  const SymMat& Q() const { return Q_; }
  const SymMat& R() const { return R_; }
  const SymMat& H() const { return H_; }
  int n_x() const { return Q_.dim(); }
  int n_u() const { return R_.dim(); }

 private:
  SymMat Q_, R_, H_;
};

struct ValueCertificate {
  SymMat P;      // value Hessian, J(X) = tr[P X]
  SymMat Theta;  // Q-function matrix, Q(Z) = tr[Theta Z]
  Policy K;
  double residual = 0.0;  // generalized Riccati residual of P (Frobenius)
};

/// [I, K^T]^T X [I, K^T]
SymMat policy_lift(const Policy& pol, const SymMat& x);

/// [I, K^T] M [I, K^T]^T, the adjoint of policy_lift.
SymMat policy_adjoint(const Policy& pol, const SymMat& m);

/// Solves P = pi*(H + E*(P)) as a dense linear system in svec coordinates.
/// Throws NotStabilizingError when rho(T_K) >= 1 and SingularError when the
/// system is too ill-conditioned (condition > 1e12).
ValueCertificate evaluate_policy(const CpOperator& op, const CostSpec& cost, const Policy& pol);

/// Theta = H + E*(P)
SymMat q_matrix(const CpOperator& op, const CostSpec& cost, const SymMat& P);

/// K = -Theta_uu^{-1} Theta_ux. Throws ImprovementError unless
/// lambda_min(Theta_uu) > 1e-10.
Policy improve(const SymMat& theta, int n_x, int n_u);

/// ||P - Q - E*_xx(P) + E*_ux(P)^T (R + E*_uu(P))^{-1} E*_ux(P)||_F
double riccati_residual(const CpOperator& op, const CostSpec& cost, const SymMat& P);

struct PolicyIterationOptions {
  int max_iter = 200;
  double tol = 1e-12;  // on ||K_{k+1} - K_k||_F
};

class PolicyIterationError : public std::runtime_error {
 public:
  PolicyIterationError(const std::string& what, ValueCertificate last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const ValueCertificate& last() const { return last_; }

 private:
  ValueCertificate last_;
};

/// Evaluate/improve until the gain stops moving. The returned certificate
/// holds the final gain with its own value and Q-matrix.
ValueCertificate exact_policy_iteration(const CpOperator& op, const CostSpec& cost, const Policy& k_init,
                                        const PolicyIterationOptions& opts = {});

struct Suboptimality {
  double value = 0.0;  // (tr P_pi - tr P*) / tr P*, +inf when not stabilizing
  bool stabilizing = true;
};

Suboptimality relative_suboptimality(const CpOperator& op, const CostSpec& cost, const Policy& pol,
                                     const ValueCertificate& reference);

/// ||K - K*||_2 / ||K*||_2 with the spectral norm.
double relative_gain_error(const Policy& pol, const Policy& reference);

// MsSystem conveniences.
inline ValueCertificate evaluate_policy(const MsSystem& sys, const CostSpec& cost, const Policy& pol) {
  return evaluate_policy(sys.op(), cost, pol);
}
inline SymMat q_matrix(const MsSystem& sys, const CostSpec& cost, const SymMat& P) {
  return q_matrix(sys.op(), cost, P);
}
inline double riccati_residual(const MsSystem& sys, const CostSpec& cost, const SymMat& P) {
  return riccati_residual(sys.op(), cost, P);
}
inline ValueCertificate exact_policy_iteration(const MsSystem& sys, const CostSpec& cost, const Policy& k_init,
                                               const PolicyIterationOptions& opts = {}) {
  return exact_policy_iteration(sys.op(), cost, k_init, opts);
}
inline Suboptimality relative_suboptimality(const MsSystem& sys, const CostSpec& cost, const Policy& pol,
                                            const ValueCertificate& reference) {
  return relative_suboptimality(sys.op(), cost, pol, reference);
}

}  // namespace mspi
