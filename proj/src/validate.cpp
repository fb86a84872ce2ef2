#include <cmath>
#include <sstream>

#include "mspi/bench.hpp"
#include "mspi/kernels.hpp"

namespace mspi {

namespace {

SymMat random_sym(int n, Rng& rng) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = std::normal_distribution<double>()(rng);
  return SymMat(Matrix(a + a.transpose()));
}

SymMat random_psd(int n, Rng& rng) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = std::normal_distribution<double>()(rng);
  return SymMat(Matrix(a * a.transpose()));
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CheckResult check_svec_inner(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const SymMat x = random_sym(n, rng);
    const SymMat y = random_sym(n, rng);
    const double lhs = svec(x).data.dot(svec(y).data);
    const double rhs = (x.mat() * y.mat()).trace();
    worst = std::max(worst, std::abs(lhs - rhs) / (x.norm() * y.norm()));
  }
  return {"svec inner product identity", worst <= 1e-10, "max rel err " + sci(worst)};
}

CheckResult check_adjoint(const MsSystem& sys, Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const SymMat z = random_sym(sys.n_z(), rng);
    const SymMat p = random_sym(sys.n_x(), rng);
    const double lhs = (p.mat() * apply_E(sys, z).mat()).trace();
    const double rhs = (apply_E_adjoint(sys, p).mat() * z.mat()).trace();
    worst = std::max(worst, std::abs(lhs - rhs) / (p.norm() * z.norm()));
  }
  return {"moment operator adjoint identity", worst <= 1e-10, "max rel err " + sci(worst)};
}

CheckResult check_rank_one(const MsSystem& sys, Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = standard_normal(sys.n_x(), rng);
    const Vector u = standard_normal(sys.n_u(), rng);
    const Vector w = sample_noise(sys.noise(), rng);
    Vector z(sys.n_z());
    z << x, u;
    const SymMat lhs = outer(step(sys, x, u, w));
    const SymMat rhs = sampled_E(sys, outer(z), w);
    worst = std::max(worst, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));
  }
  return {"rank-1 transition identity", worst <= 1e-10, "max err " + sci(worst)};
}

CheckResult check_psd_preservation(const MsSystem& sys, Rng& rng) {
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 200; ++trial) {
    worst = std::min(worst, min_eigenvalue(apply_E(sys, random_psd(sys.n_z(), rng))));
  }
  return {"PSD preservation", worst >= -1e-9, "min eigenvalue " + sci(worst)};
}

CheckResult check_sampler_moment(const MsSystem& sys, std::uint64_t seed, int draws) {
  Rng rng = substream(seed, {0x6e6f697365ULL});
  Matrix acc = Matrix::Zero(sys.n_w(), sys.n_w());
  for (int i = 0; i < draws; ++i) {
    const Vector w = sample_noise(sys.noise(), rng);
    acc.noalias() += w * w.transpose();
  }
  acc /= draws;
  const Matrix& W = sys.W().mat();
  double worst = 0.0;
  for (int i = 0; i < W.rows(); ++i) {
    for (int j = 0; j < W.cols(); ++j) {
      const double scale = std::sqrt(W(i, i) * W(j, j));
      if (scale == 0.0) continue;
      worst = std::max(worst, std::abs(acc(i, j) - W(i, j)) / scale);
    }
  }
  return {"noise sampler second moment (" + std::to_string(draws) + " draws)", worst <= 0.01,
          "max rel dev " + sci(worst)};
}

CheckResult check_kernels(Rng& rng) {
  const kernels::KernelSet& ref = kernels::scalar_kernels();
  const kernels::KernelSet& act = kernels::active_kernels();
  double worst = 0.0;
  for (std::size_t n = 1; n <= 11; ++n) {
    const Vector a = standard_normal(static_cast<int>(n), rng);
    const Vector b = standard_normal(static_cast<int>(n), rng);
    worst = std::max(worst, std::abs(ref.dot(n, a.data(), b.data()) - act.dot(n, a.data(), b.data())));
    Vector o1(sd(static_cast<int>(n))), o2(sd(static_cast<int>(n)));
    ref.svec_outer(n, a.data(), o1.data());
    act.svec_outer(n, a.data(), o2.data());
    worst = std::max(worst, (o1 - o2).cwiseAbs().maxCoeff());
  }
  return {std::string("kernel equivalence (") + std::string(act.name) + " vs scalar)", worst <= 1e-12,
          "max abs diff " + sci(worst)};
}

CheckResult check_determinism(std::uint64_t seed) {
  ExperimentConfig cfg = preset_experiment("offpolicy", Scale::desk);
  cfg.iterations = 5;
  cfg.repeats = 3;
  cfg.rollout.M = 5;
  cfg.rollout.T = 20;
  cfg.seed = seed;
  std::ostringstream a, b, c;
  write_csv(a, run_experiment(cfg));
  write_csv(b, run_experiment(cfg));
  cfg.threads = 3;
  write_csv(c, run_experiment(cfg));
  const bool same = a.str() == b.str() && a.str() == c.str();
  return {"byte-level run determinism", same, same ? "identical CSV bytes (1 and 3 threads)" : "CSV bytes differ"};
}

}  // namespace

std::vector<CheckResult> validate_invariants(std::uint64_t seed, bool quick) {
  const MsSystem sys = satellite_system();
  Rng rng = substream(seed, {0x76616c6964ULL});
  std::vector<CheckResult> out;
  out.push_back(check_svec_inner(rng));
  out.push_back(check_adjoint(sys, rng));
  out.push_back(check_rank_one(sys, rng));
  out.push_back(check_psd_preservation(sys, rng));
  out.push_back(check_sampler_moment(sys, seed, quick ? 100000 : 1000000));
  out.push_back(check_kernels(rng));
  out.push_back(check_determinism(seed));
  return out;
}

}  // namespace mspi
