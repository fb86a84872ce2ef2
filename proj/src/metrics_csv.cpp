#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mspi/bench.hpp"
#include "mspi/errors.hpp"

namespace mspi {

namespace {

constexpr const char* kHeader =
    "experiment,learner,repeat,iteration,samples,rel_suboptimality,rel_gain_error,stable,flagged,wall_time";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("csv: bad number \"" + s + "\"");
  return v;
}

long long parse_int(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ConfigError("csv: bad integer \"" + s + "\"");
  return v;
}

}  // namespace

void write_csv(std::ostream& os, std::span<const MetricsRecord> records) {
  os << kMetricsCsvVersion << '\n' << kHeader << '\n';
  for (const auto& r : records) {
    os << r.experiment << ',' << r.learner << ',' << r.repeat << ',' << r.iteration << ',' << r.samples << ','
       << fmt(r.rel_suboptimality) << ',' << fmt(r.rel_gain_error) << ',' << (r.stable ? 1 : 0) << ','
       << (r.flagged ? 1 : 0) << ',' << fmt(r.wall_time) << '\n';
  }
}

std::vector<MetricsRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsCsvVersion) throw ConfigError("csv: missing version line");
  if (!std::getline(is, line) || line != kHeader) throw ConfigError("csv: unexpected header");
  std::vector<MetricsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw ConfigError("csv: expected 10 columns, got " + std::to_string(f.size()));
    MetricsRecord r;
    r.experiment = f[0];
    r.learner = f[1];
    r.repeat = static_cast<int>(parse_int(f[2]));
    r.iteration = static_cast<int>(parse_int(f[3]));
    r.samples = static_cast<std::uint64_t>(parse_int(f[4]));
    r.rel_suboptimality = parse_double(f[5]);
    r.rel_gain_error = parse_double(f[6]);
    r.stable = parse_int(f[7]) != 0;
    r.flagged = parse_int(f[8]) != 0;
    r.wall_time = parse_double(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

void emit_csv(std::span<const MetricsRecord> records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit_csv: cannot open " + path);
  write_csv(os, records);
  if (!os) throw std::runtime_error("emit_csv: write failed for " + path);
}

std::vector<MetricsRecord> load_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_csv: cannot open " + path);
  return read_csv(is);
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
  os << "learner,iteration,samples,p10,median,p90\n";
  for (const auto& r : rows) {
    os << r.learner << ',' << r.iteration << ',' << r.samples << ',' << fmt(r.p10) << ',' << fmt(r.median) << ','
       << fmt(r.p90) << '\n';
  }
}

void write_instability_csv(std::ostream& os, std::span<const InstabilityRow> rows) {
  os << "beta0,iteration,pct_unstable\n";
  for (const auto& r : rows) os << fmt(r.beta0) << ',' << r.iteration << ',' << fmt(r.pct_unstable) << '\n';
}

}  // namespace mspi
