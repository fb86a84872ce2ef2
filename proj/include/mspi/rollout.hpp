#pragma once

// Data generation: M rollouts of length T under the perturbed policy
//
//   u_k^j = (K + U^j) x_k^j + nu_k^j,
//
// with U^j uniform on the Frobenius sphere of radius r_U (drawn once per
// trajectory per call) and nu_k^j uniform in the Euclidean ball of radius
// r_nu (drawn per step). Each transition yields a moment pair
// (Z, X+) = (z z^T, x+ x+^T).

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "mspi/msdyn.hpp"

namespace mspi {

enum class RolloutMode { reset, continuous };

struct RolloutConfig {
  int M = 1;          // trajectories per call
  int T = 1;          // steps per trajectory
  double r_U = 0.0;   // gain perturbation radius
  double r_nu = 0.0;  // additive input noise radius
  double r_x = 1.0;   // initial state radius
  RolloutMode mode = RolloutMode::reset;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One transition. Only the rank-one factors are stored; Z() and X_plus()
/// materialize the moments. The realized noise is deliberately not kept.
struct Sample {
  Vector z;       // (x_k, u_k)
  Vector x_next;  // x_{k+1}
  int traj = 0;
  int step = 0;
  std::uint64_t iteration = 0;
  std::shared_ptr<const Policy> applied;  // K + U^j, shared by the trajectory

  const Policy& applied_gain() const { return *applied; }

  SymMat Z() const { return outer(z); }
  SymMat X_plus() const { return outer(x_next); }
};

/// Carried between calls: terminal states for continuous mode and the call
/// counter that indexes RNG substreams.
struct RolloutState {
  std::vector<Vector> terminal;
  std::uint64_t iteration = 0;
};

/// RNG substream for (seed, iteration, trajectory).
Rng trajectory_stream(std::uint64_t seed, std::uint64_t iteration, int traj);

Matrix sample_sphere_matrix(int n_u, int n_x, double r, Rng& rng);
Vector sample_ball(int d, double r, Rng& rng);
void sample_ball(int d, double r, Rng& rng, double* out);

/// Generates M*T samples, trajectory-major and step-minor, then advances
/// state.iteration. The result is identical for any `threads` >= 1.
std::vector<Sample> generate(const MsSystem& sys, const RolloutConfig& cfg, const Policy& pol, RolloutState& state,
                             int threads = 1);

/// CSV columns: iter, traj, step, Z_0..Z_{sd(n_z)-1}, Xp_0..Xp_{sd(n_x)-1}
/// (svec coordinates), 17 significant digits.
void write_samples_csv(std::ostream& os, std::span<const Sample> samples, bool header = true);

}  // namespace mspi
