#pragma once

// Data-driven controller synthesis:
//   * approximate policy iteration with recursive instrumental-variable
//     least squares on Q-function parameters (PI),
//   * recursive least-squares identification of the moment operator with
//     certainty-equivalent synthesis (SI),
//   * zeroth-order natural policy gradient (PG).

#include <cstdint>
#include <span>
#include <vector>

#include "mspi/exactctl.hpp"
#include "mspi/rollout.hpp"

namespace mspi {

// ---------------------------------------------------------------------------
// Instrumental-variable least squares

/// Recursive IV estimator. theta estimates svec(Theta_pi); S is the
/// confidence matrix, initialized to beta0 * I.
struct IvState {
  Vector theta;
  RowMatrix S;

  static IvState init(const Vector& theta0, double beta0);
};

/// One temporal-difference equation b = a^T theta with instrument g:
/// g = svec(Z), a = svec(Z - pi_next(X+)), b = tr[H Z].
struct IvRegressors {
  Vector g;
  Vector a;
  double b = 0.0;
};

IvRegressors iv_regressors(const Sample& sample, const Policy& pol_next, const SymMat& H);

/// Rank-one recursion
///   L = S g / (1 + a^T S g),  theta += L (b - a^T theta),  S -= L (a^T S).
/// Throws SingularError("IV update singular") if |1 + a^T S g| <= 1e-12;
/// the state is left untouched in that case.
void iv_update(IvState& state, const Vector& g, const Vector& a, double b);

/// (sum g a^T)^{-1} sum g b
Vector iv_batch_estimate(std::span<const IvRegressors> rows);
/// Ordinary least squares on the same equations, (sum a a^T)^{-1} sum a b.
/// Inconsistent under multiplicative noise; kept for comparison.
Vector ols_batch_estimate(std::span<const IvRegressors> rows);

// ---------------------------------------------------------------------------
// Approximate policy iteration

struct PiOptions {
  Vector theta0;       // initial Q-parameter guess, svec(Theta_0)
  double beta0 = 1.0;  // S_0 = beta0 * I
  bool on_policy = false;
  bool abort_on_failure = false;  // otherwise keep the previous gain
};

struct PiState {
  IvState iv;
  Policy K;  // gain for the next batch, K_k = improve(theta_{k-1})
  int n_x = 0;
  int n_u = 0;
  std::uint64_t singular_skipped = 0;
  std::uint64_t nonfinite_skipped = 0;
  std::uint64_t improvement_failures = 0;
};

/// Throws ImprovementError when theta0 does not define a gain.
PiState pi_init(const PiOptions& opts, int n_x, int n_u);

struct PiIterationReport {
  Policy K_used;  // gain that defined Z+ for this batch
  Policy K_next;  // gain extracted after the batch
  bool improvement_failed = false;
  std::size_t samples_used = 0;
};

/// Runs the recursion over a batch with Z+ = pi_K(X+) for the current K,
/// then extracts the next gain.
PiIterationReport pi_consume(PiState& state, std::span<const Sample> samples, const CostSpec& cost,
                             const PiOptions& opts);

/// Generates one batch (behavior gain off-policy, current gain on-policy)
/// and consumes it.
PiIterationReport pi_iteration(const MsSystem& sys, const CostSpec& cost, const RolloutConfig& cfg,
                               const Policy& behavior, PiState& state, RolloutState& rollout, const PiOptions& opts);

// ---------------------------------------------------------------------------
// System identification

/// Recursive least squares for the rows of the operator matrix, with a
/// single regressor covariance shared across rows.
struct SiState {
  int n_x = 0;
  int n_u = 0;
  RowMatrix M_hat;  // sd(n_x) x sd(n_z)
  RowMatrix P;      // sd(n_z) x sd(n_z)
  std::uint64_t nonfinite_skipped = 0;

  static SiState init(int n_x, int n_u, double beta = 1e6);
  CpOperator estimate() const { return CpOperator(n_x, n_u, Matrix(M_hat)); }
};

void si_update(SiState& state, const Sample& sample);

struct SiSynthesis {
  Policy K;
  bool fallback_used = false;
};

/// Exact policy iteration on the estimated operator. Returns K_fallback
/// flagged when no stabilizing solution is found for the estimate.
SiSynthesis si_synthesize(const SiState& state, const CostSpec& cost, const Policy& K_fallback);

// ---------------------------------------------------------------------------
// Policy gradient

enum class PgMode {
  as_printed,       // K -= eta * grad * Sigma
  natural_inverse,  // K -= eta * grad * Sigma^{-1}
};

struct PgGradient {
  Matrix grad;   // n_u x n_x
  SymMat Sigma;  // n_x x n_x
  int used = 0;
  int excluded = 0;  // trajectories dropped by the divergence guard
};

constexpr double kPgDivergenceGuard = 1e8;

/// Gradient and state-covariance estimates from rollouts of K + U^j with
/// ||U^j||_F = r_U. `samples` must be trajectory-major with T steps each.
PgGradient pg_estimate(std::span<const Sample> samples, const Policy& K, const CostSpec& cost, int T, double r_U);

/// Generates rollouts with r_nu forced to 0 and estimates the gradient. The
/// generated samples are appended to `samples_out` when given.
PgGradient pg_gradient(const MsSystem& sys, const CostSpec& cost, const Policy& K, const RolloutConfig& cfg,
                       RolloutState& rollout, std::vector<Sample>* samples_out = nullptr);

struct PgState {
  Policy K;
  double eta = 7.5e-3;
};

void pg_step(PgState& state, const Matrix& grad, const SymMat& Sigma, PgMode mode = PgMode::as_printed);

}  // namespace mspi
