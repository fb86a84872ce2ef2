#include "mspi/learners.hpp"

#include <cmath>
#include <string>

#include "mspi/errors.hpp"
#include "mspi/kernels.hpp"

namespace mspi {

namespace {

constexpr double kSingularDenominator = 1e-12;

Vector svec_outer(const Vector& z) {
  Vector out(sd(static_cast<int>(z.size())));
  kernels::active_kernels().svec_outer(static_cast<std::size_t>(z.size()), z.data(), out.data());
  return out;
}

bool usable(const Sample& s) {
  return s.z.allFinite() && s.x_next.allFinite() && s.z.norm() <= kPgDivergenceGuard &&
         s.x_next.norm() <= kPgDivergenceGuard;
}

}  // namespace

// ---------------------------------------------------------------------------

IvState IvState::init(const Vector& theta0, double beta0) {
  const auto n = theta0.size();
  return IvState{theta0, RowMatrix(beta0 * RowMatrix::Identity(n, n))};
}

IvRegressors iv_regressors(const Sample& sample, const Policy& pol_next, const SymMat& H) {
  const auto nx = sample.x_next.size();
  if (sample.z.size() != H.dim() || pol_next.n_x() != nx || nx + pol_next.n_u() != H.dim()) {
    throw DimensionError("iv_regressors: dimension mismatch");
  }
  Vector z_plus(H.dim());
  z_plus << sample.x_next, pol_next.K * sample.x_next;
  IvRegressors r;
  r.g = svec_outer(sample.z);
  r.a = r.g - svec_outer(z_plus);
  r.b = sample.z.dot(H.mat() * sample.z);
  return r;
}

void iv_update(IvState& state, const Vector& g, const Vector& a, double b) {
  const auto n = static_cast<std::size_t>(state.theta.size());
  if (static_cast<std::size_t>(g.size()) != n || static_cast<std::size_t>(a.size()) != n) {
    throw DimensionError("iv_update: regressor length mismatch");
  }
  const kernels::KernelSet& k = kernels::active_kernels();
  Vector Sg(n), aS(n);
  k.gemv(n, n, state.S.data(), g.data(), Sg.data());
  k.gemv_t(n, n, state.S.data(), a.data(), aS.data());
  const double den = 1.0 + k.dot(n, a.data(), Sg.data());
  if (!(std::abs(den) > kSingularDenominator)) throw SingularError("IV update singular");
  const Vector L = Sg / den;
  const double err = b - k.dot(n, a.data(), state.theta.data());
  k.axpy(n, err, L.data(), state.theta.data());
  k.ger_sub(n, n, state.S.data(), L.data(), aS.data());
}

namespace {

Vector batch_solve(std::span<const IvRegressors> rows, bool instrumented) {
  if (rows.empty()) throw DimensionError("batch estimate: no equations");
  const auto n = rows.front().g.size();
  Matrix lhs = Matrix::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  for (const IvRegressors& r : rows) {
    const Vector& left = instrumented ? r.g : r.a;
    lhs.noalias() += left * r.a.transpose();
    rhs += left * r.b;
  }
  Eigen::FullPivLU<Matrix> lu(lhs);
  if (!lu.isInvertible()) throw SingularError("batch estimate: normal matrix is singular");
  return lu.solve(rhs);
}

}  // namespace

Vector iv_batch_estimate(std::span<const IvRegressors> rows) { return batch_solve(rows, true); }
Vector ols_batch_estimate(std::span<const IvRegressors> rows) { return batch_solve(rows, false); }

// ---------------------------------------------------------------------------

PiState pi_init(const PiOptions& opts, int n_x, int n_u) {
  if (opts.theta0.size() != sd(n_x + n_u)) throw DimensionError("pi_init: theta0 must have sd(n_z) entries");
  if (!(opts.beta0 > 0.0)) throw ConfigError("pi_init: beta0 must be positive");
  PiState state;
  state.iv = IvState::init(opts.theta0, opts.beta0);
  state.K = improve(unsvec(opts.theta0), n_x, n_u);
  state.n_x = n_x;
  state.n_u = n_u;
  return state;
}

PiIterationReport pi_consume(PiState& state, std::span<const Sample> samples, const CostSpec& cost,
                             const PiOptions& opts) {
  PiIterationReport report;
  report.K_used = state.K;
  for (const Sample& s : samples) {
    if (!usable(s)) {
      ++state.nonfinite_skipped;
      continue;
    }
    const IvRegressors r = iv_regressors(s, report.K_used, cost.H());
    try {
      iv_update(state.iv, r.g, r.a, r.b);
      ++report.samples_used;
    } catch (const SingularError&) {
      ++state.singular_skipped;
    }
  }
  try {
    state.K = improve(unsvec(state.iv.theta), state.n_x, state.n_u);
  } catch (const ImprovementError&) {
    ++state.improvement_failures;
    report.improvement_failed = true;
    if (opts.abort_on_failure) throw;
  }
  report.K_next = state.K;
  return report;
}

PiIterationReport pi_iteration(const MsSystem& sys, const CostSpec& cost, const RolloutConfig& cfg,
                               const Policy& behavior, PiState& state, RolloutState& rollout, const PiOptions& opts) {
  const Policy& gen = opts.on_policy ? state.K : behavior;
  const std::vector<Sample> samples = generate(sys, cfg, gen, rollout);
  return pi_consume(state, samples, cost, opts);
}

// ---------------------------------------------------------------------------

SiState SiState::init(int n_x, int n_u, double beta) {
  if (!(beta > 0.0)) throw ConfigError("SiState: beta must be positive");
  SiState s;
  s.n_x = n_x;
  s.n_u = n_u;
  const int nz = sd(n_x + n_u);
  s.M_hat = RowMatrix::Zero(sd(n_x), nz);
  s.P = beta * RowMatrix::Identity(nz, nz);
  return s;
}

void si_update(SiState& state, const Sample& sample) {
  if (sample.z.size() != state.n_x + state.n_u || sample.x_next.size() != state.n_x) {
    throw DimensionError("si_update: sample dimension mismatch");
  }
  if (!usable(sample)) {
    ++state.nonfinite_skipped;
    return;
  }
  const kernels::KernelSet& k = kernels::active_kernels();
  const Vector g = svec_outer(sample.z);
  const Vector y = svec_outer(sample.x_next);
  const auto n = static_cast<std::size_t>(g.size());
  const auto rows = static_cast<std::size_t>(y.size());

  Vector Pg(n);
  k.gemv(n, n, state.P.data(), g.data(), Pg.data());
  const double den = 1.0 + k.dot(n, g.data(), Pg.data());
  const Vector gain = Pg / den;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = state.M_hat.data() + r * n;
    const double err = y[static_cast<Eigen::Index>(r)] - k.dot(n, row, g.data());
    k.axpy(n, err, gain.data(), row);
  }
  k.ger_sub(n, n, state.P.data(), gain.data(), Pg.data());
}

SiSynthesis si_synthesize(const SiState& state, const CostSpec& cost, const Policy& K_fallback) {
  const CpOperator op = state.estimate();
  if (!op.M.allFinite()) return {K_fallback, true};
  const Policy zero{Matrix::Zero(state.n_u, state.n_x)};
  for (const Policy* start : {&K_fallback, &zero}) {
    if (!is_ms_stabilizing(op, *start)) continue;
    try {
      return {exact_policy_iteration(op, cost, *start).K, false};
    } catch (const std::runtime_error&) {
      // Estimate admits no well-posed solution from this start.
    }
  }
  return {K_fallback, true};
}

// ---------------------------------------------------------------------------

PgGradient pg_estimate(std::span<const Sample> samples, const Policy& K, const CostSpec& cost, int T, double r_U) {
  if (T < 1 || samples.size() % static_cast<std::size_t>(T) != 0) {
    throw DimensionError("pg_estimate: sample count is not a multiple of T");
  }
  if (!(r_U > 0.0)) throw ConfigError("pg_estimate: r_U must be positive");
  const int nx = K.n_x();
  const int nu = K.n_u();
  const auto M = samples.size() / static_cast<std::size_t>(T);

  PgGradient out;
  out.grad = Matrix::Zero(nu, nx);
  Matrix sigma = Matrix::Zero(nx, nx);
  const kernels::KernelSet& k = kernels::active_kernels();
  const Matrix& H = cost.H().mat();  // symmetric, so column-major storage reads as row-major
  const auto nz = static_cast<std::size_t>(H.rows());
  Vector hz(H.rows());
  for (std::size_t j = 0; j < M; ++j) {
    const auto traj = samples.subspan(j * static_cast<std::size_t>(T), static_cast<std::size_t>(T));
    double cost_j = 0.0;
    Matrix sigma_j = Matrix::Zero(nx, nx);
    bool diverged = false;
    for (const Sample& s : traj) {
      if (!usable(s)) {
        diverged = true;
        break;
      }
      k.gemv(nz, nz, H.data(), s.z.data(), hz.data());
      cost_j += k.dot(nz, s.z.data(), hz.data());
      const auto x = s.z.head(nx);
      sigma_j.noalias() += x * x.transpose();
    }
    if (diverged) {
      ++out.excluded;
      continue;
    }
    ++out.used;
    out.grad += cost_j * (traj.front().applied_gain().K - K.K);
    sigma += sigma_j;
  }
  if (out.used > 0) {
    out.grad *= static_cast<double>(nx * nu) / (static_cast<double>(out.used) * r_U * r_U);
    sigma /= static_cast<double>(out.used);
  }
  out.Sigma = SymMat(std::move(sigma));
  return out;
}

PgGradient pg_gradient(const MsSystem& sys, const CostSpec& cost, const Policy& K, const RolloutConfig& cfg,
                       RolloutState& rollout, std::vector<Sample>* samples_out) {
  RolloutConfig pg_cfg = cfg;
  pg_cfg.r_nu = 0.0;
  std::vector<Sample> samples = generate(sys, pg_cfg, K, rollout);
  PgGradient g = pg_estimate(samples, K, cost, pg_cfg.T, pg_cfg.r_U);
  if (samples_out != nullptr) {
    samples_out->insert(samples_out->end(), std::make_move_iterator(samples.begin()),
                        std::make_move_iterator(samples.end()));
  }
  return g;
}

void pg_step(PgState& state, const Matrix& grad, const SymMat& Sigma, PgMode mode) {
  if (grad.rows() != state.K.n_u() || grad.cols() != state.K.n_x() || Sigma.dim() != state.K.n_x()) {
    throw DimensionError("pg_step: dimension mismatch");
  }
  if (mode == PgMode::as_printed) {
    state.K.K -= state.eta * grad * Sigma.mat();
    return;
  }
  Eigen::LDLT<Matrix> ldlt(Sigma.mat());
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) {
    throw SingularError("pg_step: Sigma is singular");
  }
  state.K.K -= state.eta * ldlt.solve(grad.transpose()).transpose();
}

}  // namespace mspi
