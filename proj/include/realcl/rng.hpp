#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "realcl/errors.hpp"

namespace realcl {

/// Deterministic random stream. The core engine is mt19937_64 (bit-exact by
/// the standard); every variate transform is implemented here rather than
/// via std::*_distribution, whose output is implementation-defined. Same
/// seed + same call sequence gives the same stream everywhere.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Uniform integer in [0, n). n >= 1.
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal, Marsaglia polar method.
  double normal() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
inline double gamma_sample(SeededRng& rng, double shape) {
  if (!(shape > 0.0)) {
    throw InvalidShape("gamma_sample: shape must be positive");
  }
  if (shape < 1.0) {
    const double g = gamma_sample(rng, shape + 1.0);
    double u = rng.uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// Beta(alpha, beta) draw in [0, 1] as a ratio of two gamma variates.
inline double beta_sample(SeededRng& rng, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw InvalidShape("beta_sample: alpha and beta must be positive");
  }
  const double x = gamma_sample(rng, alpha);
  const double y = gamma_sample(rng, beta);
  return x / (x + y);
}

}  // namespace realcl
