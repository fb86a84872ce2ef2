// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Experiments run at desk scale with fixed seeds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mspi/bench.hpp"
#include "mspi/errors.hpp"

using namespace mspi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome exact_solver() {
  const auto t0 = Clock::now();
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const ValueCertificate opt = exact_policy_iteration(sys, cost, satellite_initial_gain());
  const double residual = riccati_residual(sys, cost, opt.P) / opt.P.norm();

  Rng rng(2024);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  double worst = 0.0;
  int restarts = 0;
  while (restarts < 20) {
    Policy K{Matrix(1, 2)};
    K.K << box(rng), box(rng);
    if (!is_ms_stabilizing(sys, K)) continue;
    ++restarts;
    worst = std::max(worst, (exact_policy_iteration(sys, cost, K).K.K - opt.K.K).norm());
  }
  const double secs = seconds_since(t0);
  return {residual < 1e-8 && worst < 1e-6 && secs < 1.0,
          fmt("residual/||P*||=%.2e, worst restart deviation=%.2e over 20 restarts, %.3f s", residual, worst, secs)};
}

Outcome scalar_oracle() {
  const Matrix one = Matrix::Constant(1, 1, 1.0);
  const MsSystem sys = MsSystem::from_noise({Mode{0.5 * one, one}}, make_table_noise({Vector::Ones(1)}, {1.0}));
  const CostSpec cost{SymMat(one), SymMat(one)};
  const double p_star = (0.25 + std::sqrt(4.0625)) / 2.0;
  const double p = exact_policy_iteration(sys, cost, Policy{0.0 * one}).P.mat()(0, 0);
  const double p0 = evaluate_policy(sys, cost, Policy{0.0 * one}).P.mat()(0, 0);
  return {std::abs(p - p_star) < 1e-10 && std::abs(p0 - 4.0 / 3.0) < 1e-12,
          fmt("|P*-oracle|=%.2e, |P(0)-4/3|=%.2e", std::abs(p - p_star), std::abs(p0 - 4.0 / 3.0))};
}

Outcome recursive_iv() {
  const auto t0 = Clock::now();
  Rng rng(31);
  const int n = 6;
  const double beta0 = 10.0;
  const Vector theta0 = standard_normal(n, rng);
  IvState st = IvState::init(theta0, beta0);
  Matrix lhs = Matrix::Identity(n, n) / beta0;
  Vector rhs = theta0 / beta0;
  for (int i = 0; i < 50; ++i) {
    const Vector g = standard_normal(n, rng);
    const Vector a = standard_normal(n, rng);
    const double b = standard_normal(1, rng)[0];
    iv_update(st, g, a, b);
    lhs += g * a.transpose();
    rhs += g * b;
  }
  const Vector batch = lhs.fullPivLu().solve(rhs);
  const double err = (st.theta - batch).norm() / batch.norm();
  const double secs = seconds_since(t0);
  return {err < 1e-8 && secs < 0.1, fmt("relative difference=%.2e, %.4f s", err, secs)};
}

Outcome iv_vs_ols() {
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const Policy K0 = satellite_initial_gain();
  const Vector truth = svec(evaluate_policy(sys, cost, K0).Theta).data;
  std::vector<double> iv_err, ols_err;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RolloutConfig cfg;
    cfg.M = 1000;
    cfg.T = 100;
    cfg.r_nu = 0.1;
    cfg.seed = seed;
    RolloutState rs;
    std::vector<IvRegressors> rows;
    rows.reserve(100000);
    for (const Sample& s : generate(sys, cfg, K0, rs)) rows.push_back(iv_regressors(s, K0, cost.H()));
    iv_err.push_back((iv_batch_estimate(rows) - truth).norm() / truth.norm());
    ols_err.push_back((ols_batch_estimate(rows) - truth).norm() / truth.norm());
  }
  const double iv = median(iv_err), ols = median(ols_err);
  return {iv <= ols / 10.0, fmt("median relative error IV=%.3e, OLS=%.3e, ratio=%.3f", iv, ols, iv / ols)};
}

Outcome offpolicy_rates() {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = preset_experiment("offpolicy", Scale::desk);
  const auto recs = run_experiment(cfg);
  // Slopes over the final half of the run.
  const int window = cfg.iterations / 2;
  const double sub = rate_slope(recs, "PI", Metric::suboptimality, window);
  const double gain = rate_slope(recs, "PI", Metric::gain_error, window);
  return {sub >= -1.3 && sub <= -0.7 && gain >= -0.7 && gain <= -0.3,
          fmt("suboptimality slope=%.3f (want [-1.3,-0.7]), gain-error slope=%.3f (want [-0.7,-0.3]), %.1f s", sub,
              gain, seconds_since(t0))};
}

Outcome onpolicy_decrease() {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = preset_experiment("onpolicy", Scale::desk);
  const auto rows = summarize(run_experiment(cfg), "PI", Metric::suboptimality);
  const double first = rows[1].median;
  const double last = rows.back().median;
  const double orders = std::log10(first / last);
  return {orders >= 2.0, fmt("median suboptimality %.3e at iteration 1, %.3e at iteration %d: %.2f orders, %.1f s",
                             first, last, rows.back().iteration, orders, seconds_since(t0))};
}

Outcome pg_stagnation() {
  const auto t0 = Clock::now();
  const int window = 225;
  double plateau[2] = {0, 0};
  double slope[2] = {0, 0};
  const char* presets[2] = {"pg-m1", "pg-m10"};
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig cfg = preset_experiment(presets[i], Scale::desk);
    cfg.pg_mode = PgMode::natural_inverse;
    cfg.repeats = 25;
    const auto recs = run_experiment(cfg);
    slope[i] = rate_slope(recs, "PG", Metric::suboptimality, window);
    const auto rows = summarize(recs, "PG", Metric::suboptimality);
    std::vector<double> tail;
    for (std::size_t k = rows.size() - window; k < rows.size(); ++k) tail.push_back(rows[k].median);
    plateau[i] = median(tail);
  }
  const bool flat = slope[0] >= -0.3 && slope[0] <= 0.1 && slope[1] >= -0.3 && slope[1] <= 0.1;
  return {flat && plateau[1] < plateau[0],
          fmt("M=30: slope=%.3f plateau=%.3e; M=300: slope=%.3f plateau=%.3e (slopes want [-0.3,0.1], plateau "
              "must drop), %.1f s",
              slope[0], plateau[0], slope[1], plateau[1], seconds_since(t0))};
}

Outcome instability() {
  const auto t0 = Clock::now();
  InstabilityConfig cfg;
  cfg.repeats = 200;
  cfg.seed = 1;
  const auto rows = instability_experiment(cfg);
  double worst_small = 0.0;
  for (const auto& r : rows) {
    if (r.beta0 == 0.1) worst_small = std::max(worst_small, r.pct_unstable);
  }
  std::vector<double> means;
  for (double b : cfg.betas) means.push_back(mean_instability(rows, b));
  const bool monotone = std::is_sorted(means.begin(), means.end());
  return {worst_small == 0.0 && monotone,
          fmt("max %% unstable at beta0=0.1: %.1f; means %.3f / %.3f / %.3f / %.3f, %.1f s", worst_small, means[0],
              means[1], means[2], means[3], seconds_since(t0))};
}

Outcome invariants() {
  const auto t0 = Clock::now();
  std::string failed;
  for (const CheckResult& c : validate_invariants(1, false)) {
    if (!c.passed) failed += " " + c.name + " (" + c.detail + ")";
  }
  return {failed.empty(), failed.empty() ? fmt("all checks passed, %.1f s", seconds_since(t0)) : "failed:" + failed};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact policy iteration certified", exact_solver},
      {"scalar analytic oracle", scalar_oracle},
      {"recursive IV equals batch IV", recursive_iv},
      {"IV beats OLS by 10x", iv_vs_ols},
      {"off-policy rates", offpolicy_rates},
      {"on-policy decrease", onpolicy_decrease},
      {"PG stagnation", pg_stagnation},
      {"instability versus beta0", instability},
      {"structural invariants", invariants},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s - %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
