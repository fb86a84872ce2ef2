#include "mspi/rng.hpp"

#include <cmath>

namespace mspi {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

Vector standard_normal(int d, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = n01(rng);
  return v;
}

void uniform_in_ball(int d, double r, Rng& rng, double* out) {
  if (d == 0) return;
  // Draws are consumed even for r == 0 so the stream layout is radius independent.
  std::normal_distribution<double> n01(0.0, 1.0);
  double sq = 0.0;
  for (int i = 0; i < d; ++i) {
    out[i] = n01(rng);
    sq += out[i] * out[i];
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double nrm = std::sqrt(sq);
  const double s = (r == 0.0 || nrm == 0.0) ? 0.0 : r * std::pow(u, 1.0 / d) / nrm;
  for (int i = 0; i < d; ++i) out[i] *= s;
}

Vector uniform_in_ball(int d, double r, Rng& rng) {
  Vector v(d);
  uniform_in_ball(d, r, rng, v.data());
  return v;
}

Matrix uniform_on_sphere(int rows, int cols, double r, Rng& rng) {
  Vector g = standard_normal(rows * cols, rng);
  const double nrm = g.norm();
  if (r == 0.0 || nrm == 0.0) return Matrix::Zero(rows, cols);
  g *= r / nrm;
  return Eigen::Map<Matrix>(g.data(), rows, cols);
}

}  // namespace mspi
