#include <gtest/gtest.h>

#include <cmath>

#include "mspi/bench.hpp"
#include "mspi/errors.hpp"
#include "mspi/exactctl.hpp"
#include "test_systems.hpp"

namespace mspi {
namespace {

using testing::random_psd;
using testing::random_sym;
using testing::scalar;
using testing::scalar_cost;
using testing::scalar_gain;
using testing::scalar_system;

// Positive root of P^2 - 0.25 P - 1 = 0.
const double kScalarPstar = (0.25 + std::sqrt(4.0625)) / 2.0;

// Independent full-vec oracle (value iteration on the Riccati map and
// fixed-point iteration of the Lyapunov map), frozen here.
const double kSatTracePK0 = 12.082812791940567;
const double kSatTracePstar = 10.759080269110868;
const double kSatKstar[2] = {0.33153338656427317, -0.60455289407192};

TEST(CostSpec, RequiresPositiveDefiniteWeights) {
  EXPECT_THROW(CostSpec(SymMat(scalar(0)), SymMat(scalar(1))), DimensionError);
  EXPECT_THROW(CostSpec(SymMat(scalar(1)), SymMat(scalar(-1))), DimensionError);
  const CostSpec c = satellite_cost();
  EXPECT_EQ(c.H().mat(), Matrix::Identity(3, 3));
}

TEST(PolicyLift, Examples) {
  Rng rng(1);
  const SymMat x = random_psd(2, rng);
  const SymMat z0 = policy_lift(Policy{Matrix::Zero(1, 2)}, x);
  EXPECT_EQ(z0.mat().topLeftCorner(2, 2), x.mat());
  EXPECT_EQ(z0.mat().row(2).norm(), 0.0);

  const SymMat z = policy_lift(satellite_initial_gain(), SymMat::identity(2));
  EXPECT_DOUBLE_EQ(z(2, 0), 0.5);
  EXPECT_DOUBLE_EQ(z(2, 1), -0.75);
  EXPECT_DOUBLE_EQ(z(2, 2), 0.8125);
}

TEST(PolicyLift, PreservesRank) {
  Rng rng(2);
  const Policy k = satellite_initial_gain();
  for (int r = 1; r <= 2; ++r) {
    const Vector g = standard_normal(2 * r, rng);
    const Matrix f = Eigen::Map<const Matrix>(g.data(), 2, r);
    const SymMat x(Matrix(f * f.transpose()));
    Eigen::FullPivLU<Matrix> lu(policy_lift(k, x).mat());
    lu.setThreshold(1e-10);
    EXPECT_EQ(lu.rank(), r);
  }
}

TEST(PolicyAdjoint, DualityAndExamples) {
  Rng rng(3);
  const Policy k = satellite_initial_gain();
  for (int i = 0; i < 50; ++i) {
    const SymMat m = random_sym(3, rng);
    const SymMat x = random_sym(2, rng);
    const double lhs = (m.mat() * policy_lift(k, x).mat()).trace();
    const double rhs = (policy_adjoint(k, m).mat() * x.mat()).trace();
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * m.norm() * x.norm());
  }
  const SymMat m = random_sym(3, rng);
  EXPECT_EQ(policy_adjoint(Policy{Matrix::Zero(1, 2)}, m).mat(), m.mat().topLeftCorner(2, 2));
  const CostSpec c = satellite_cost();
  EXPECT_EQ(policy_adjoint(Policy{Matrix::Zero(1, 2)}, c.H()).mat(), c.Q().mat());
}

TEST(EvaluatePolicy, ScalarGeometricSeries) {
  const MsSystem sys = scalar_system();
  const ValueCertificate c = evaluate_policy(sys, scalar_cost(), scalar_gain(0));
  EXPECT_NEAR(c.P(0, 0), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(evaluate_policy(sys, scalar_cost(), scalar_gain(-0.5)).P(0, 0), 1.25, 1e-12);
}

TEST(EvaluatePolicy, RejectsUnstableGain) {
  EXPECT_THROW(evaluate_policy(scalar_system(), scalar_cost(), scalar_gain(1.0)), NotStabilizingError);
  EXPECT_THROW(evaluate_policy(satellite_system(), satellite_cost(), Policy{Matrix::Zero(1, 2)}),
               NotStabilizingError);
}

TEST(EvaluatePolicy, SatelliteNeumannSeries) {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const Policy k0 = satellite_initial_gain();
  const ValueCertificate c = evaluate_policy(sys, cost, k0);

  // P = sum_t (T_K^T)^t svec(pi*(H)), truncated at 1e4 terms.
  const Matrix tt = closed_loop_matrix(sys, k0).transpose();
  Vector term = svec(policy_adjoint(k0, cost.H())).data;
  Vector sum = Vector::Zero(term.size());
  for (int t = 0; t < 10000; ++t) {
    sum += term;
    term = tt * term;
  }
  EXPECT_LT((svec(c.P).data - sum).norm(), 1e-8);
  EXPECT_NEAR(c.P.trace(), kSatTracePK0, 1e-8);
  EXPECT_TRUE(is_psd(c.P));
}

TEST(EvaluatePolicy, BellmanConsistency) {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const Policy k0 = satellite_initial_gain();
  const SymMat P = evaluate_policy(sys, cost, k0).P;
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const SymMat x = random_psd(2, rng);
    const SymMat z = policy_lift(k0, x);
    const double lhs = (x.mat() * P.mat()).trace();
    const double rhs = (z.mat() * cost.H().mat()).trace() + (P.mat() * apply_E(sys, z).mat()).trace();
    EXPECT_NEAR(lhs, rhs, 1e-8 * std::abs(lhs));
  }
}

TEST(QMatrix, Examples) {
  const MsSystem sys = scalar_system();
  const CostSpec cost = scalar_cost();
  EXPECT_EQ(q_matrix(sys, cost, SymMat::zero(1)).mat(), cost.H().mat());
  Matrix expected(2, 2);
  expected << 1 + 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1 + 4.0 / 3.0;
  EXPECT_LT((q_matrix(sys, cost, SymMat(scalar(4.0 / 3.0))).mat() - expected).norm(), 1e-14);

  const MsSystem sat = satellite_system();
  const CostSpec sc = satellite_cost();
  Rng rng(5);
  const SymMat P = random_psd(2, rng);
  const SymMat theta = q_matrix(sat, sc, P);
  for (int i = 0; i < 20; ++i) {
    const SymMat z = random_sym(3, rng);
    const double lhs = (theta.mat() * z.mat()).trace();
    const double rhs = (z.mat() * sc.H().mat()).trace() + (P.mat() * apply_E(sat, z).mat()).trace();
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1 + std::abs(lhs)));
  }
}

TEST(Improve, Examples) {
  const Policy k0 = improve(unsvec(satellite_initial_theta()), 2, 1);
  EXPECT_NEAR(k0.K(0, 0), 0.5, 1e-4);
  EXPECT_NEAR(k0.K(0, 1), -0.75, 1e-4);

  EXPECT_EQ(improve(SymMat::identity(3), 2, 1).K, Matrix::Zero(1, 2));

  Matrix theta(2, 2);
  theta << 1 + 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1 + 4.0 / 3.0;
  EXPECT_NEAR(improve(SymMat(theta), 1, 1).K(0, 0), -2.0 / 7.0, 1e-15);

  Matrix bad = Matrix::Identity(3, 3);
  bad(2, 2) = -1;
  EXPECT_THROW(improve(SymMat(bad), 2, 1), ImprovementError);
  bad(2, 2) = 0;
  EXPECT_THROW(improve(SymMat(bad), 2, 1), ImprovementError);
}

TEST(Improve, MinimizesLiftedQFunction) {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const SymMat theta = q_matrix(sys, cost, evaluate_policy(sys, cost, satellite_initial_gain()).P);
  const Policy best = improve(theta, 2, 1);
  Rng rng(6);
  auto value = [&](const Policy& k, const SymMat& x) { return (theta.mat() * policy_lift(k, x).mat()).trace(); };
  for (int i = 0; i < 100; ++i) {
    const SymMat x(Matrix(random_psd(2, rng).mat() + 1e-3 * Matrix::Identity(2, 2)));
    Policy perturbed = best;
    perturbed.K += sample_sphere_matrix(1, 2, 1e-3, rng);
    EXPECT_GE(value(perturbed, x), value(best, x) - 1e-12);
  }
}

TEST(ExactPolicyIteration, ScalarAnalyticRoot) {
  const MsSystem sys = scalar_system();
  const CostSpec cost = scalar_cost();
  const ValueCertificate c = exact_policy_iteration(sys, cost, scalar_gain(0));
  EXPECT_NEAR(c.P(0, 0), kScalarPstar, 1e-10);
  EXPECT_LT(riccati_residual(sys, cost, SymMat(scalar(kScalarPstar))), 1e-10);
  // K* = -ab P / (r + b^2 P)
  EXPECT_NEAR(c.K.K(0, 0), -0.5 * kScalarPstar / (1 + kScalarPstar), 1e-10);
}

TEST(ExactPolicyIteration, NoControlAuthority) {
  const MsSystem sys = scalar_system(0.8, 0.0);
  const CostSpec cost = scalar_cost();
  const ValueCertificate c = exact_policy_iteration(sys, cost, scalar_gain(0));
  EXPECT_NEAR(c.P(0, 0), evaluate_policy(sys, cost, scalar_gain(0)).P(0, 0), 1e-12);
}

TEST(ExactPolicyIteration, SatelliteOracleAndMonotoneCost) {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const ValueCertificate c = exact_policy_iteration(sys, cost, satellite_initial_gain());
  EXPECT_NEAR(c.P.trace(), kSatTracePstar, 1e-8);
  EXPECT_NEAR(c.K.K(0, 0), kSatKstar[0], 1e-8);
  EXPECT_NEAR(c.K.K(0, 1), kSatKstar[1], 1e-8);
  EXPECT_LT(riccati_residual(sys, cost, c.P), 1e-8 * c.P.norm());
  EXPECT_LT(c.residual, 1e-8 * c.P.norm());

  // Improvement steps never increase the cost.
  Policy k = satellite_initial_gain();
  double prev = evaluate_policy(sys, cost, k).P.trace();
  for (int i = 0; i < 10; ++i) {
    const ValueCertificate e = evaluate_policy(sys, cost, k);
    k = improve(e.Theta, 2, 1);
    const double next = evaluate_policy(sys, cost, k).P.trace();
    EXPECT_LE(next, prev + 1e-9);
    prev = next;
  }
}

TEST(ExactPolicyIteration, Errors) {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  EXPECT_THROW(exact_policy_iteration(sys, cost, Policy{Matrix::Zero(1, 2)}), NotStabilizingError);
  PolicyIterationOptions opts;
  opts.max_iter = 1;
  try {
    exact_policy_iteration(sys, cost, satellite_initial_gain(), opts);
    FAIL() << "expected PolicyIterationError";
  } catch (const PolicyIterationError& e) {
    EXPECT_EQ(e.last().K.n_x(), 2);
  }
}

TEST(RiccatiResidual, Examples) {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  EXPECT_NEAR(riccati_residual(sys, cost, SymMat::zero(2)), cost.Q().norm(), 1e-14);
  const ValueCertificate c = exact_policy_iteration(sys, cost, satellite_initial_gain());
  EXPECT_LT(riccati_residual(sys, cost, evaluate_policy(sys, cost, c.K).P), 1e-8);
}

TEST(RelativeSuboptimality, Examples) {
  const MsSystem sys = scalar_system();
  const CostSpec cost = scalar_cost();
  const ValueCertificate ref = exact_policy_iteration(sys, cost, scalar_gain(0));
  EXPECT_NEAR(relative_suboptimality(sys, cost, ref.K, ref).value, 0.0, 1e-9);
  // (4/3 - P*) / P*
  EXPECT_NEAR(relative_suboptimality(sys, cost, scalar_gain(0), ref).value, 0.1770430, 1e-6);
  const Suboptimality bad = relative_suboptimality(sys, cost, scalar_gain(2), ref);
  EXPECT_FALSE(bad.stabilizing);
  EXPECT_TRUE(std::isinf(bad.value));

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const Policy k = scalar_gain(-0.5 + 0.9 * (std::uniform_real_distribution<double>()(rng) - 0.5));
    EXPECT_GE(relative_suboptimality(sys, cost, k, ref).value, -1e-9);
  }
}

TEST(RelativeSuboptimality, SatelliteInitialGain) {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const ValueCertificate ref = reference_optimum(sys, cost, satellite_initial_gain());
  EXPECT_NEAR(relative_suboptimality(sys, cost, satellite_initial_gain(), ref).value,
              kSatTracePK0 / kSatTracePstar - 1.0, 1e-9);
}

TEST(RelativeGainError, SpectralNorm) {
  Matrix a(1, 2), b(1, 2);
  a << 3, 4;
  b << 0, 0;
  EXPECT_NEAR(relative_gain_error(Policy{b}, Policy{a}), 1.0, 1e-15);
  EXPECT_NEAR(relative_gain_error(Policy{a}, Policy{a}), 0.0, 1e-15);
}

}  // namespace
}  // namespace mspi
