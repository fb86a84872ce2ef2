#include "mspi/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "mspi/errors.hpp"
#include "mspi/system_io.hpp"

namespace mspi {

using nlohmann::json;

// ---------------------------------------------------------------------------

MsSystem satellite_system() {
  Matrix A1(2, 2), A2(2, 2), B1(2, 1);
  A1 << 0.43, 0.71, -1.13, 0.43;
  A2 << 0.57, -0.01, 1.13, -0.01;
  B1 << 0.36, 0.71;
  std::vector<Mode> modes{
      {A1, B1},
      {A2, Matrix::Zero(2, 1)},
      {Matrix::Zero(2, 2), B1},
  };
  NoiseSpec noise = make_ellipsoid_noise(SymMat::diagonal(Vector::Map(std::array{0.2, 0.5}.data(), 2)));
  SymMat W = SymMat::diagonal(Vector::Map(std::array{1.0, 0.2, 0.5}.data(), 3));
  return MsSystem(std::move(modes), std::move(noise), std::move(W));
}

CostSpec satellite_cost() { return CostSpec(SymMat::identity(2), SymMat::identity(1)); }

Policy satellite_initial_gain() {
  Matrix k(1, 2);
  k << 0.5, -0.75;
  return Policy{k};
}

Vector satellite_initial_theta() {
  Vector t(6);
  t << 10.0, 0.0, -2.8284, 4.0, 4.2426, 4.0;
  return t;
}

// ---------------------------------------------------------------------------

const char* to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::pi: return "PI";
    case LearnerKind::si: return "SI";
    case LearnerKind::pg: return "PG";
  }
  return "?";
}

const char* to_string(DataSource d) {
  switch (d) {
    case DataSource::fixed: return "fixed";
    case DataSource::pi: return "pi";
    case DataSource::pg: return "pg";
  }
  return "?";
}

LearnerKind learner_from_string(const std::string& s) {
  if (s == "pi" || s == "PI") return LearnerKind::pi;
  if (s == "si" || s == "SI") return LearnerKind::si;
  if (s == "pg" || s == "PG") return LearnerKind::pg;
  throw ConfigError("unknown learner \"" + s + "\"");
}

namespace {
bool has(const std::vector<LearnerKind>& v, LearnerKind k) { return std::find(v.begin(), v.end(), k) != v.end(); }
}  // namespace

void ExperimentConfig::validate() const {
  rollout.validate();
  if (repeats < 1) throw ConfigError("experiment: repeats must be >= 1");
  if (iterations < 0) throw ConfigError("experiment: iterations must be >= 0");
  if (learners.empty()) throw ConfigError("experiment: no learners selected");
  if (id.empty() || id.find_first_of(",\n\r\"") != std::string::npos) {
    throw ConfigError("experiment: id must be non-empty without commas, quotes or newlines");
  }
  if (K0.n_x() != system.n_x() || K0.n_u() != system.n_u()) throw ConfigError("experiment: K0 has the wrong shape");
  if (cost.n_x() != system.n_x() || cost.n_u() != system.n_u()) throw ConfigError("experiment: cost has the wrong shape");
  if (has(learners, LearnerKind::pi) && pi.theta0.size() != sd(system.n_z())) {
    throw ConfigError("experiment: PI theta0 must have sd(n_z) entries");
  }
  if (has(learners, LearnerKind::pg) != (data == DataSource::pg)) {
    throw ConfigError("experiment: PG learns only from its own rollouts (data = \"pg\")");
  }
  if (data == DataSource::pi && !has(learners, LearnerKind::pi)) {
    throw ConfigError("experiment: on-policy data needs the PI learner");
  }
  if (data == DataSource::pg && !(rollout.r_U > 0.0)) throw ConfigError("experiment: PG needs r_U > 0");
  if (!(pg_eta > 0.0)) throw ConfigError("experiment: pg eta must be positive");
  if (!(si_beta > 0.0)) throw ConfigError("experiment: si beta must be positive");
  if (threads < 1) throw ConfigError("experiment: threads must be >= 1");
}

ValueCertificate reference_optimum(const MsSystem& sys, const CostSpec& cost, const Policy& K0) {
  return exact_policy_iteration(sys, cost, K0);
}

std::uint64_t repeat_seed(std::uint64_t seed, int repeat) {
  return mix64(mix64(seed) ^ (0x5851f42d4c957f2dULL * (static_cast<std::uint64_t>(repeat) + 1)));
}

namespace {

MetricsRecord make_record(const ExperimentConfig& cfg, const ValueCertificate& ref, LearnerKind learner, int repeat,
                          int iteration, std::uint64_t samples, const Policy& K, bool flagged,
                          std::chrono::steady_clock::time_point start) {
  MetricsRecord rec;
  rec.experiment = cfg.id;
  rec.learner = to_string(learner);
  rec.repeat = repeat;
  rec.iteration = iteration;
  rec.samples = samples;
  const Suboptimality s = relative_suboptimality(cfg.system, cfg.cost, K, ref);
  rec.rel_suboptimality = s.value;
  rec.stable = s.stabilizing;
  rec.rel_gain_error = relative_gain_error(K, ref.K);
  rec.flagged = flagged;
  if (cfg.record_timing) {
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

std::vector<MetricsRecord> run_repeat(const ExperimentConfig& cfg, const ValueCertificate& ref, int repeat) {
  const auto start = std::chrono::steady_clock::now();
  const MsSystem& sys = cfg.system;
  RolloutConfig rcfg = cfg.rollout;
  rcfg.seed = repeat_seed(cfg.seed, repeat);
  RolloutState rstate;

  std::optional<PiState> pi;
  std::optional<SiState> si;
  std::optional<PgState> pg;
  Policy si_K = cfg.K0;
  bool si_flag = false, pi_flag = false, pg_flag = false;
  for (LearnerKind k : cfg.learners) {
    if (k == LearnerKind::pi) pi = pi_init(cfg.pi, sys.n_x(), sys.n_u());
    if (k == LearnerKind::si) si = SiState::init(sys.n_x(), sys.n_u(), cfg.si_beta);
    if (k == LearnerKind::pg) pg = PgState{cfg.K0, cfg.pg_eta};
  }

  std::vector<MetricsRecord> out;
  std::uint64_t n_samples = 0;
  auto emit = [&](int iteration) {
    for (LearnerKind k : cfg.learners) {
      const Policy& K = k == LearnerKind::pi ? pi->K : k == LearnerKind::si ? si_K : pg->K;
      const bool flag = k == LearnerKind::pi ? pi_flag : k == LearnerKind::si ? si_flag : pg_flag;
      out.push_back(make_record(cfg, ref, k, repeat, iteration, n_samples, K, flag, start));
    }
  };
  emit(0);

  for (int it = 1; it <= cfg.iterations; ++it) {
    std::vector<Sample> samples;
    switch (cfg.data) {
      case DataSource::fixed: samples = generate(sys, rcfg, cfg.K0, rstate); break;
      case DataSource::pi: samples = generate(sys, rcfg, pi->K, rstate); break;
      case DataSource::pg: {
        const PgGradient g = pg_gradient(sys, cfg.cost, pg->K, rcfg, rstate, &samples);
        pg_flag = g.excluded > 0;
        if (g.used > 0) pg_step(*pg, g.grad, g.Sigma, cfg.pg_mode);
        break;
      }
    }
    n_samples += samples.size();
    if (pi) pi_flag = pi_consume(*pi, samples, cfg.cost, cfg.pi).improvement_failed;
    if (si) {
      for (const Sample& s : samples) si_update(*si, s);
      const SiSynthesis syn = si_synthesize(*si, cfg.cost, si_K);
      si_K = syn.K;
      si_flag = syn.fallback_used;
    }
    emit(it);
  }
  return out;
}

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  const int workers = std::clamp(threads, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ValueCertificate ref = reference_optimum(cfg.system, cfg.cost, cfg.K0);
  const Suboptimality self = relative_suboptimality(cfg.system, cfg.cost, ref.K, ref);
  if (!self.stabilizing || std::abs(self.value) > 1e-9) {
    throw SingularError("run_experiment: reference optimum is inconsistent");
  }

  std::vector<std::vector<MetricsRecord>> per_repeat(static_cast<std::size_t>(cfg.repeats));
  std::vector<std::exception_ptr> errors(per_repeat.size());
  parallel_for(cfg.repeats, cfg.threads, [&](int r) {
    try {
      per_repeat[static_cast<std::size_t>(r)] = run_repeat(cfg, ref, r);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<MetricsRecord> out;
  for (auto& rows : per_repeat) {
    out.insert(out.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------

ExperimentConfig experiment_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    cfg.pi.theta0 = satellite_initial_theta();
    cfg.id = j.value("id", cfg.id);
    if (j.contains("system")) cfg.system = system_from_json(j.at("system"));
    if (j.contains("cost")) {
      cfg.cost = CostSpec(SymMat(matrix_from_json(j.at("cost").at("Q"), "cost.Q")),
                          SymMat(matrix_from_json(j.at("cost").at("R"), "cost.R")));
    }
    if (j.contains("K0")) cfg.K0 = Policy{matrix_from_json(j.at("K0"), "K0")};
    if (j.contains("learners")) {
      cfg.learners.clear();
      for (const auto& l : j.at("learners")) cfg.learners.push_back(learner_from_string(l.get<std::string>()));
    }
    const std::string data = j.value("data", std::string("fixed"));
    if (data == "fixed") cfg.data = DataSource::fixed;
    else if (data == "pi") cfg.data = DataSource::pi;
    else if (data == "pg") cfg.data = DataSource::pg;
    else throw ConfigError("experiment: unknown data source \"" + data + "\"");
    if (j.contains("rollout")) {
      const json& r = j.at("rollout");
      cfg.rollout.M = r.value("M", cfg.rollout.M);
      cfg.rollout.T = r.value("T", cfg.rollout.T);
      cfg.rollout.r_U = r.value("r_U", cfg.rollout.r_U);
      cfg.rollout.r_nu = r.value("r_nu", cfg.rollout.r_nu);
      cfg.rollout.r_x = r.value("r_x", cfg.rollout.r_x);
      const std::string mode = r.value("mode", std::string("reset"));
      if (mode == "reset") cfg.rollout.mode = RolloutMode::reset;
      else if (mode == "continuous") cfg.rollout.mode = RolloutMode::continuous;
      else throw ConfigError("rollout: unknown mode \"" + mode + "\"");
    }
    if (j.contains("pi")) {
      const json& p = j.at("pi");
      cfg.pi.beta0 = p.value("beta0", cfg.pi.beta0);
      if (p.contains("theta0")) cfg.pi.theta0 = vector_from_json(p.at("theta0"), "pi.theta0");
      cfg.pi.abort_on_failure = p.value("abort_on_failure", false);
    }
    cfg.pi.on_policy = cfg.data == DataSource::pi;
    if (j.contains("si")) cfg.si_beta = j.at("si").value("beta", cfg.si_beta);
    if (j.contains("pg")) {
      const json& p = j.at("pg");
      cfg.pg_eta = p.value("eta", cfg.pg_eta);
      const std::string mode = p.value("mode", std::string("as_printed"));
      if (mode == "as_printed") cfg.pg_mode = PgMode::as_printed;
      else if (mode == "natural_inverse") cfg.pg_mode = PgMode::natural_inverse;
      else throw ConfigError("pg: unknown mode \"" + mode + "\"");
    }
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.repeats = j.value("repeats", cfg.repeats);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.record_timing = j.value("record_timing", false);
    cfg.output = j.value("output", std::string());
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

std::vector<std::string> preset_names() { return {"offpolicy", "pg-compare", "onpolicy", "pg-m1", "pg-m10", "pg-m100"}; }

ExperimentConfig preset_experiment(const std::string& name, Scale scale) {
  const bool paper = scale == Scale::paper;
  ExperimentConfig cfg;
  cfg.id = name;
  cfg.pi.theta0 = satellite_initial_theta();
  cfg.rollout.r_x = 1.0;
  cfg.repeats = paper ? 25 : 10;
  cfg.seed = 1;

  if (name == "offpolicy") {
    cfg.learners = {LearnerKind::pi, LearnerKind::si};
    cfg.data = DataSource::fixed;
    cfg.rollout.M = 30;
    cfg.rollout.T = 100;
    cfg.rollout.r_nu = 0.1;
    cfg.pi.beta0 = 2000.0;
    cfg.iterations = paper ? 5000 : 200;
  } else if (name == "pg-compare") {
    cfg.learners = {LearnerKind::pg, LearnerKind::pi, LearnerKind::si};
    cfg.data = DataSource::pg;
    cfg.rollout.M = paper ? 3000 : 300;
    cfg.rollout.T = 100;
    cfg.rollout.r_U = 0.15;
    cfg.pi.beta0 = 5.0;
    cfg.iterations = 250;
  } else if (name == "onpolicy") {
    cfg.learners = {LearnerKind::pi};
    cfg.data = DataSource::pi;
    cfg.rollout.M = 1;
    cfg.rollout.T = 100;
    cfg.rollout.r_nu = 0.1;
    cfg.rollout.mode = RolloutMode::continuous;
    cfg.pi.beta0 = 100.0;
    cfg.iterations = paper ? 1000 : 300;
  } else if (name == "pg-m1" || name == "pg-m10" || name == "pg-m100") {
    const int factor = name == "pg-m1" ? 1 : name == "pg-m10" ? 10 : 100;
    cfg.learners = {LearnerKind::pg};
    cfg.data = DataSource::pg;
    cfg.rollout.M = (paper ? 300 : 30) * factor;
    cfg.rollout.T = 100;
    cfg.rollout.r_U = 0.15;
    cfg.iterations = 250;
  } else {
    throw ConfigError("unknown preset \"" + name + "\"");
  }
  cfg.pi.on_policy = cfg.data == DataSource::pi;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

std::vector<InstabilityRow> instability_experiment(const InstabilityConfig& cfg) {
  if (cfg.repeats < 1 || cfg.iterations < 1) throw ConfigError("instability: repeats and iterations must be >= 1");
  const MsSystem sys = satellite_system();
  const CostSpec cost = satellite_cost();
  const Policy K0 = satellite_initial_gain();

  std::vector<InstabilityRow> rows;
  for (std::size_t b = 0; b < cfg.betas.size(); ++b) {
    const double beta = cfg.betas[b];
    // unstable[r][k] for iterations 1..iterations
    std::vector<std::vector<char>> unstable(static_cast<std::size_t>(cfg.repeats));
    parallel_for(cfg.repeats, cfg.threads, [&](int r) {
      PiOptions opts;
      opts.theta0 = satellite_initial_theta();
      opts.beta0 = beta;
      PiState state = pi_init(opts, sys.n_x(), sys.n_u());
      RolloutConfig rcfg;
      rcfg.M = cfg.M;
      rcfg.T = cfg.T;
      rcfg.r_nu = cfg.r_nu;
      rcfg.r_x = cfg.r_x;
      // Same data stream for every beta0 so the tunings are compared on identical rollouts.
      rcfg.seed = repeat_seed(cfg.seed, r);
      RolloutState rstate;
      auto& flags = unstable[static_cast<std::size_t>(r)];
      flags.reserve(static_cast<std::size_t>(cfg.iterations));
      for (int it = 1; it <= cfg.iterations; ++it) {
        const PiIterationReport rep = pi_iteration(sys, cost, rcfg, K0, state, rstate, opts);
        flags.push_back(rep.improvement_failed || !is_ms_stabilizing(sys, rep.K_next) ? 1 : 0);
      }
    });
    for (int it = 1; it <= cfg.iterations; ++it) {
      int count = 0;
      for (const auto& f : unstable) count += f[static_cast<std::size_t>(it - 1)];
      rows.push_back({beta, it, 100.0 * count / cfg.repeats});
    }
  }
  return rows;
}

double mean_instability(std::span<const InstabilityRow> rows, double beta0) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.beta0 == beta0) {
      sum += r.pct_unstable;
      ++n;
    }
  }
  if (n == 0) throw ConfigError("mean_instability: no rows for this beta0");
  return sum / n;
}

// ---------------------------------------------------------------------------

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("loglog_slope: size mismatch");
  if (x.size() < 5) throw ConfigError("loglog_slope: need at least 5 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ConfigError("loglog_slope: values must be positive and finite");
    }
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) throw ConfigError("loglog_slope: x values are all equal");
  return (n * sxy - sx * sy) / denom;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi || std::isinf(v[lo]) || std::isinf(v[hi])) return v[hi];
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<SummaryRow> summarize(std::span<const MetricsRecord> records, const std::string& learner,
                                  Metric metric) {
  std::map<int, std::pair<std::uint64_t, std::vector<double>>> by_iter;
  for (const auto& r : records) {
    if (r.learner != learner) continue;
    auto& slot = by_iter[r.iteration];
    slot.first = r.samples;
    slot.second.push_back(metric == Metric::suboptimality ? r.rel_suboptimality : r.rel_gain_error);
  }
  std::vector<SummaryRow> out;
  for (auto& [it, slot] : by_iter) {
    out.push_back({learner, it, slot.first, quantile(slot.second, 0.1), quantile(slot.second, 0.5),
                   quantile(slot.second, 0.9)});
  }
  return out;
}

double rate_slope(std::span<const MetricsRecord> records, const std::string& learner, Metric metric, int window) {
  std::vector<SummaryRow> rows = summarize(records, learner, metric);
  std::erase_if(rows, [](const SummaryRow& r) { return r.samples == 0; });
  if (window < 5 || static_cast<int>(rows.size()) < 5) throw ConfigError("rate_slope: insufficient data");
  const auto take = std::min(rows.size(), static_cast<std::size_t>(window));
  std::vector<double> x, y;
  for (std::size_t i = rows.size() - take; i < rows.size(); ++i) {
    x.push_back(static_cast<double>(rows[i].samples));
    y.push_back(rows[i].median);
  }
  return loglog_slope(x, y);
}

}  // namespace mspi
