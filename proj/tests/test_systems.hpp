#pragma once

// Small systems shared by the unit tests.

#include "mspi/exactctl.hpp"
#include "mspi/msdyn.hpp"

namespace mspi::testing {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

/// x+ = w (a x + b u) with w == 1, so W = [1].
inline MsSystem scalar_system(double a = 0.5, double b = 1.0) {
  return MsSystem::from_noise({Mode{scalar(a), scalar(b)}}, make_table_noise({Vector::Ones(1)}, {1.0}));
}

inline CostSpec scalar_cost(double q = 1.0, double r = 1.0) { return CostSpec(SymMat(scalar(q)), SymMat(scalar(r))); }

inline Policy scalar_gain(double k) { return Policy{scalar(k)}; }

inline SymMat random_sym(int n, Rng& rng) {
  const Vector g = standard_normal(n * n, rng);
  const Matrix a = Eigen::Map<const Matrix>(g.data(), n, n);
  return SymMat(Matrix(a + a.transpose()));
}

inline SymMat random_psd(int n, Rng& rng) {
  const Vector g = standard_normal(n * n, rng);
  const Matrix a = Eigen::Map<const Matrix>(g.data(), n, n);
  return SymMat(Matrix(a * a.transpose()));
}

}  // namespace mspi::testing
