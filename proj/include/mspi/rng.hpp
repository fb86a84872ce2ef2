#pragma once

// Seeded random streams. Substreams are a pure function of a root seed and
// integer coordinates (iteration, trajectory, ...), so results never depend
// on thread scheduling.

#include <cstdint>
#include <initializer_list>
#include <random>

#include "mspi/symcalc.hpp"

namespace mspi {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic substream for (seed, coords...).
Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords);

Vector standard_normal(int d, Rng& rng);

/// Uniform on the solid ball {x : ||x||_2 <= r} in R^d.
Vector uniform_in_ball(int d, double r, Rng& rng);
// Same draws as uniform_in_ball, written to out[0..d).
void uniform_in_ball(int d, double r, Rng& rng, double* out);

/// Uniform on the Frobenius sphere {U : ||U||_F = r} of rows x cols matrices.
Matrix uniform_on_sphere(int rows, int cols, double r, Rng& rng);

}  // namespace mspi
