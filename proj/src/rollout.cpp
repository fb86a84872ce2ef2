#include "mspi/rollout.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <algorithm>
#include <thread>

#include "mspi/errors.hpp"
#include "mspi/kernels.hpp"

namespace mspi {

void RolloutConfig::validate() const {
  if (M < 1 || T < 1) throw ConfigError("rollout: M and T must be >= 1");
  if (!(r_U >= 0.0) || !(r_nu >= 0.0) || !(r_x >= 0.0)) throw ConfigError("rollout: radii must be >= 0");
}

Rng trajectory_stream(std::uint64_t seed, std::uint64_t iteration, int traj) {
  return substream(seed, {iteration, static_cast<std::uint64_t>(traj)});
}

Matrix sample_sphere_matrix(int n_u, int n_x, double r, Rng& rng) { return uniform_on_sphere(n_u, n_x, r, rng); }

Vector sample_ball(int d, double r, Rng& rng) { return uniform_in_ball(d, r, rng); }

void sample_ball(int d, double r, Rng& rng, double* out) { uniform_in_ball(d, r, rng, out); }

namespace {

void run_trajectory(const MsSystem& sys, const RolloutConfig& cfg, const Policy& pol, std::uint64_t iteration,
                    int j, const Vector* carried, std::span<Sample> out, Vector& terminal) {
  Rng rng = trajectory_stream(cfg.seed, iteration, j);
  const int nx = sys.n_x();
  const int nu = sys.n_u();
  terminal = carried != nullptr ? *carried : sample_ball(nx, cfg.r_x, rng);
  const auto applied = std::make_shared<const Policy>(Policy{pol.K + sample_sphere_matrix(nu, nx, cfg.r_U, rng)});
  const kernels::KernelSet& k = kernels::active_kernels();
  const RowMatrix gain = applied->K;

  // terminal doubles as the running state; z = (x, u) is rebuilt in place.
  Vector z(nx + nu);
  Vector w(sys.n_w());
  Vector scratch(nx);
  z.head(nx) = terminal;
  for (int t = 0; t < cfg.T; ++t) {
    double* u = z.data() + nx;
    sample_ball(nu, cfg.r_nu, rng, u);  // nu_k, then u = (K + U) x + nu_k
    k.gemv(static_cast<std::size_t>(nu), static_cast<std::size_t>(nx), gain.data(), z.data(), scratch.data());
    for (int i = 0; i < nu; ++i) u[i] += scratch[i];
    sample_noise(sys.noise(), rng, w);

    Sample& s = out[static_cast<std::size_t>(t)];
    s.z = z;
    s.x_next.resize(nx);
    step_into(sys, z.data(), w.data(), scratch.data(), s.x_next.data());
    s.traj = j;
    s.step = t;
    s.iteration = iteration;
    s.applied = applied;
    z.head(nx) = s.x_next;
  }
  terminal = z.head(nx);
}

}  // namespace

std::vector<Sample> generate(const MsSystem& sys, const RolloutConfig& cfg, const Policy& pol, RolloutState& state,
                             int threads) {
  cfg.validate();
  if (pol.n_x() != sys.n_x() || pol.n_u() != sys.n_u()) throw DimensionError("generate: gain shape mismatch");

  const bool carry = cfg.mode == RolloutMode::continuous && !state.terminal.empty();
  if (carry) {
    if (state.terminal.size() != static_cast<std::size_t>(cfg.M)) {
      throw DimensionError("generate: carried state count differs from M");
    }
    for (const Vector& x : state.terminal) {
      if (x.size() != sys.n_x()) throw DimensionError("generate: carried state has wrong dimension");
    }
  }

  const auto M = static_cast<std::size_t>(cfg.M);
  const auto T = static_cast<std::size_t>(cfg.T);
  std::vector<Sample> samples(M * T);
  std::vector<Vector> terminal(M);
  const std::uint64_t iteration = state.iteration;

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      run_trajectory(sys, cfg, pol, iteration, static_cast<int>(j), carry ? &state.terminal[j] : nullptr,
                     std::span<Sample>(samples).subspan(j * T, T), terminal[j]);
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, M);
  if (n_threads == 1) {
    work(0, M);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (M + n_threads - 1) / n_threads;
    for (std::size_t b = 0; b < M; b += chunk) pool.emplace_back(work, b, std::min(M, b + chunk));
  }

  state.terminal = std::move(terminal);
  ++state.iteration;
  return samples;
}

void write_samples_csv(std::ostream& os, std::span<const Sample> samples, bool header) {
  if (samples.empty()) {
    if (header) os << "iter,traj,step\n";
    return;
  }
  const int nz = static_cast<int>(samples.front().z.size());
  const int nx = static_cast<int>(samples.front().x_next.size());
  if (header) {
    os << "iter,traj,step";
    for (int k = 0; k < sd(nz); ++k) os << ",Z_" << k;
    for (int k = 0; k < sd(nx); ++k) os << ",Xp_" << k;
    os << '\n';
  }
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (const Sample& s : samples) {
    os << s.iteration << ',' << s.traj << ',' << s.step;
    const SvecVector gz = svec(s.Z());
    for (Eigen::Index k = 0; k < gz.data.size(); ++k) put(gz.data[k]);
    const SvecVector gx = svec(s.X_plus());
    for (Eigen::Index k = 0; k < gx.data.size(); ++k) put(gx.data[k]);
    os << '\n';
  }
}

}  // namespace mspi
