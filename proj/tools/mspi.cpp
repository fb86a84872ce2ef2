// Command-line front end for the experiment harness.

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mspi/bench.hpp"
#include "mspi/errors.hpp"
#include "mspi/kernels.hpp"

namespace {

using namespace mspi;

Scale parse_scale(const std::string& s) {
  if (s == "desk") return Scale::desk;
  if (s == "paper") return Scale::paper;
  throw ConfigError("--scale must be desk or paper");
}

// One CSV for all learners and both metrics: a leading "metric" column in
// front of the per-iteration summary columns.
void write_summaries(const std::string& path, const std::vector<MetricsRecord>& records) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  std::set<std::string> learners;
  for (const auto& r : records) learners.insert(r.learner);
  os << "metric,learner,iteration,samples,p10,median,p90\n";
  for (const auto& l : learners) {
    for (Metric m : {Metric::suboptimality, Metric::gain_error}) {
      std::ostringstream part;
      write_summary_csv(part, summarize(records, l, m));
      std::istringstream lines(part.str());
      std::string line;
      std::getline(lines, line);  // per-block header
      const char* tag = m == Metric::suboptimality ? "suboptimality," : "gain_error,";
      while (std::getline(lines, line)) os << tag << line << "\n";
    }
  }
}

void print_rates(const std::vector<MetricsRecord>& records, int window) {
  std::set<std::string> learners;
  for (const auto& r : records) learners.insert(r.learner);
  for (const auto& l : learners) {
    for (Metric m : {Metric::suboptimality, Metric::gain_error}) {
      const char* name = m == Metric::suboptimality ? "suboptimality" : "gain_error";
      std::cout << l << " " << name << " slope: ";
      try {
        const double slope = rate_slope(records, l, m, window);
        std::cout << slope << "\n";
      } catch (const std::exception& e) {
        std::cout << "n/a (" << e.what() << ")\n";
      }
    }
    const auto rows = summarize(records, l, Metric::suboptimality);
    if (!rows.empty()) {
      std::cout << l << " final median suboptimality: " << rows.back().median << " at N=" << rows.back().samples
                << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy iteration, system identification and policy gradient for multiplicative-noise LQR"};
  app.require_subcommand(1);

  std::string scale_name = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<int> threads;
  std::string out;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config or a preset");
  std::string config_path, preset, summary_path;
  std::optional<int> iterations;
  int window = 50;
  run->add_option("config", config_path, "Experiment config (JSON)");
  run->add_option("--preset", preset, "Preset name instead of a config file");
  run->add_option("--seed", seed);
  run->add_option("--repeats", repeats);
  run->add_option("--iterations", iterations);
  run->add_option("--threads", threads);
  run->add_option("--scale", scale_name, "desk or paper (presets only)");
  run->add_option("--out", out, "Metrics CSV path");
  run->add_option("--summary", summary_path, "Median/quantile band CSV path");
  run->add_option("--window", window, "Final-iteration window for rate slopes");
  bool timing = false;
  run->add_flag("--timing", timing, "Fill the wall_time column (breaks byte-identical reruns)");
  std::string pg_mode;
  run->add_option("--pg-mode", pg_mode, "PG update: as_printed or natural_inverse")
      ->check(CLI::IsMember({"as_printed", "natural_inverse"}));

  auto* inst = app.add_subcommand("instability", "Percentage of unstable PI policies versus beta0");
  std::optional<int> inst_iterations;
  inst->add_option("--seed", seed);
  inst->add_option("--repeats", repeats);
  inst->add_option("--iterations", inst_iterations);
  inst->add_option("--threads", threads);
  inst->add_option("--scale", scale_name, "desk (200 repeats) or paper (1000 repeats)");
  inst->add_option("--out", out, "CSV path");

  auto* rates = app.add_subcommand("rates", "Rate slopes from a metrics CSV");
  std::string csv_path;
  int rates_window = 50;
  rates->add_option("csv", csv_path, "Metrics CSV")->required();
  rates->add_option("--window", rates_window);
  rates->add_option("--summary", summary_path, "Median/quantile band CSV path");

  auto* validate = app.add_subcommand("validate", "Structural invariant suite");
  bool quick = false;
  validate->add_option("--seed", seed);
  validate->add_flag("--quick", quick, "Fewer Monte-Carlo draws");

  auto* samples = app.add_subcommand("samples", "Dump one rollout batch of the satellite system as CSV");
  RolloutConfig rcfg;
  rcfg.M = 30;
  rcfg.T = 100;
  rcfg.r_nu = 0.1;
  samples->add_option("--M", rcfg.M);
  samples->add_option("--T", rcfg.T);
  samples->add_option("--r-nu", rcfg.r_nu);
  samples->add_option("--r-U", rcfg.r_U);
  samples->add_option("--r-x", rcfg.r_x);
  samples->add_option("--seed", seed);
  samples->add_option("--out", out, "CSV path (stdout when empty)");

  CLI11_PARSE(app, argc, argv);

  try {
    std::cerr << "kernels: " << kernels::active_kernels().name << "\n";
    if (*run) {
      ExperimentConfig cfg;
      if (!preset.empty()) {
        cfg = preset_experiment(preset, parse_scale(scale_name));
      } else if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw ConfigError("cannot open " + config_path);
        cfg = experiment_from_json(nlohmann::json::parse(is));
      } else {
        throw ConfigError("run: give a config path or --preset (" + [] {
          std::string s;
          for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
          return s;
        }() + ")");
      }
      if (seed) cfg.seed = *seed;
      if (repeats) cfg.repeats = *repeats;
      if (iterations) cfg.iterations = *iterations;
      if (threads) cfg.threads = *threads;
      if (!out.empty()) cfg.output = out;
      if (timing) cfg.record_timing = true;
      if (!pg_mode.empty()) cfg.pg_mode = pg_mode == "natural_inverse" ? PgMode::natural_inverse : PgMode::as_printed;
      cfg.validate();
      const auto records = run_experiment(cfg);
      if (!cfg.output.empty()) {
        emit_csv(records, cfg.output);
        std::cout << "wrote " << records.size() << " rows to " << cfg.output << "\n";
      }
      if (!summary_path.empty()) write_summaries(summary_path, records);
      print_rates(records, window);
    } else if (*inst) {
      InstabilityConfig cfg;
      cfg.repeats = parse_scale(scale_name) == Scale::paper ? 1000 : 200;
      if (seed) cfg.seed = *seed;
      if (repeats) cfg.repeats = *repeats;
      if (inst_iterations) cfg.iterations = *inst_iterations;
      if (threads) cfg.threads = *threads;
      const auto rows = instability_experiment(cfg);
      if (!out.empty()) {
        std::ofstream os(out);
        write_instability_csv(os, rows);
      }
      for (double b : cfg.betas) {
        std::cout << "beta0=" << b << " mean % unstable: " << mean_instability(rows, b) << "\n";
      }
    } else if (*rates) {
      const auto records = load_csv(csv_path);
      if (!summary_path.empty()) write_summaries(summary_path, records);
      print_rates(records, rates_window);
    } else if (*validate) {
      bool ok = true;
      for (const auto& c : validate_invariants(seed.value_or(7), quick)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        ok = ok && c.passed;
      }
      return ok ? 0 : 1;
    } else if (*samples) {
      rcfg.seed = seed.value_or(0);
      RolloutState state;
      const auto batch = generate(satellite_system(), rcfg, satellite_initial_gain(), state);
      if (out.empty()) {
        write_samples_csv(std::cout, batch);
      } else {
        std::ofstream os(out);
        write_samples_csv(os, batch);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
