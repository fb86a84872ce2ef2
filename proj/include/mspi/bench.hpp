#pragma once

// Experiment harness: the satellite benchmark, seeded repeated runs of the
// learners, rate-slope analysis and CSV emission.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mspi/learners.hpp"

namespace mspi {

// ---------------------------------------------------------------------------
// Satellite benchmark

/// Pitch dynamics of a satellite with three noise modes, w = (1, v) and
/// E[v v^T] = diag(0.2, 0.5).
MsSystem satellite_system();
/// Q = I_2, R = 1.
CostSpec satellite_cost();
/// K0 = [0.5, -0.75]
Policy satellite_initial_gain();
/// svec of the initial Q-matrix guess whose improved gain is K0.
Vector satellite_initial_theta();

// ---------------------------------------------------------------------------
// Experiments

enum class LearnerKind { pi, si, pg };
enum class DataSource {
  fixed,  // behavior gain K0 every iteration (off-policy)
  pi,     // latest PI gain (on-policy)
  pg,     // PG rollouts (r_nu = 0), shared with the other learners
};
enum class Scale { desk, paper };

const char* to_string(LearnerKind k);
const char* to_string(DataSource d);
LearnerKind learner_from_string(const std::string& s);

struct ExperimentConfig {
  std::string id = "experiment";
  MsSystem system = satellite_system();
  CostSpec cost = satellite_cost();
  Policy K0 = satellite_initial_gain();
  std::vector<LearnerKind> learners{LearnerKind::pi};
  DataSource data = DataSource::fixed;
  RolloutConfig rollout;
  PiOptions pi;
  double si_beta = 1e6;
  double pg_eta = 7.5e-3;
  PgMode pg_mode = PgMode::as_printed;
  int iterations = 0;
  int repeats = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  bool record_timing = false;  // wall_time column is 0 unless set
  std::string output;

  /// Throws ConfigError.
  void validate() const;
};

struct MetricsRecord {
  std::string experiment;
  std::string learner;
  int repeat = 0;
  int iteration = 0;
  std::uint64_t samples = 0;  // cumulative N
  double rel_suboptimality = 0.0;  // +inf when not stabilizing
  double rel_gain_error = 0.0;
  bool stable = true;
  // PI: improvement failed and the previous gain was kept.
  // SI: no stabilizing certainty-equivalent solution, fallback gain kept.
  // PG: at least one rollout excluded by the divergence guard.
  bool flagged = false;
  double wall_time = 0.0;  // seconds since the start of the repeat

  bool operator==(const MetricsRecord&) const = default;
};

/// Reference optimum (K*, P*) by exact policy iteration from `K0`.
ValueCertificate reference_optimum(const MsSystem& sys, const CostSpec& cost, const Policy& K0);

/// Ordered by (repeat, iteration, learner in config order); deterministic
/// for a given config regardless of `threads`.
std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg);

/// Seed of repeat r derived from the experiment seed.
std::uint64_t repeat_seed(std::uint64_t seed, int repeat);

ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Named presets: "offpolicy", "pg-compare", "onpolicy", "pg-m1", "pg-m10",
/// "pg-m100".
ExperimentConfig preset_experiment(const std::string& name, Scale scale);
std::vector<std::string> preset_names();

// ---------------------------------------------------------------------------
// Instability versus beta0

struct InstabilityConfig {
  std::vector<double> betas{0.1, 1.0, 10.0, 100.0};
  int M = 5;
  int T = 10;
  int iterations = 100;
  int repeats = 1000;
  double r_nu = 0.1;
  double r_x = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct InstabilityRow {
  double beta0 = 0.0;
  int iteration = 0;
  double pct_unstable = 0.0;
};

/// A PI policy counts as unstable when it is not mean-square stabilizing on
/// the true system or its improvement step failed.
std::vector<InstabilityRow> instability_experiment(const InstabilityConfig& cfg);

double mean_instability(std::span<const InstabilityRow> rows, double beta0);

void write_instability_csv(std::ostream& os, std::span<const InstabilityRow> rows);

// ---------------------------------------------------------------------------
// Analysis

enum class Metric { suboptimality, gain_error };

/// Least-squares slope of log(y) against log(x). Needs >= 5 points with
/// positive finite values.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct SummaryRow {
  std::string learner;
  int iteration = 0;
  std::uint64_t samples = 0;
  double p10 = 0.0, median = 0.0, p90 = 0.0;
};

/// Per-iteration median and 10/90% empirical quantiles across repeats.
std::vector<SummaryRow> summarize(std::span<const MetricsRecord> records, const std::string& learner,
                                  Metric metric);

/// Slope of log(median metric) vs log(N) over the final `window` iterations
/// with N > 0.
double rate_slope(std::span<const MetricsRecord> records, const std::string& learner, Metric metric,
                  int window);

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kMetricsCsvVersion = "# mspi-metrics v1";

void write_csv(std::ostream& os, std::span<const MetricsRecord> records);
std::vector<MetricsRecord> read_csv(std::istream& is);
void emit_csv(std::span<const MetricsRecord> records, const std::string& path);
std::vector<MetricsRecord> load_csv(const std::string& path);

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);

// ---------------------------------------------------------------------------
// Structural invariant suite (also behind the `validate` subcommand)

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> validate_invariants(std::uint64_t seed, bool quick = false);

}  // namespace mspi
