// SPDX-License-Identifier: Apache-2.0
//
// Seeded random streams. The engine is std::mt19937_64 (bit-exact across
// standard libraries); the variate transforms below are written out so the
// drawn values do not depend on the standard library's distribution code.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fmica/numerics.hpp"

namespace fmica {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Independent stream for (master seed, stream index).
  static Rng stream(std::uint64_t master, std::uint64_t index) {
    return Rng(splitmix64(master) ^ splitmix64(index * 0xD1B54A32D192ED03ull + 1));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze/rejection; shape < 1 uses
  /// the boost G(a) = G(a + 1) U^{1/a}.
  double gamma(double shape) {
    if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// R-diagonal signs folded into Q (modified Gram-Schmidt on columns).
inline Matrix haar_orthogonal(std::size_t p, Rng& rng) {
  Matrix g(p, p);
  for (double& v : g.data()) v = rng.normal();
  Matrix q(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    Vector col = g.column(j);
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < p; ++i) d += q(i, k) * col[i];
      for (std::size_t i = 0; i < p; ++i) col[i] -= d * q(i, k);
    }
    const double len = norm(col);
    for (std::size_t i = 0; i < p; ++i) q(i, j) = col[i] / len;
  }
  return q;
}

}  // namespace fmica
