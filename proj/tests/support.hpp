// Shared fixtures for the test suites.
#pragma once

#include <cstdint>
#include <vector>

#include "fmica/fmica.hpp"

namespace fmica::test {

/// p x n sample with independent standardized rows.
inline DataMatrix source_sample(const std::vector<SourceSpec>& specs, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix z(specs.size(), n);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto d = sample(specs[k], n, rng);
    std::copy(d.begin(), d.end(), z.row(k).begin());
  }
  return DataMatrix(std::move(z));
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

inline Matrix rotation2(double theta) {
  return {{std::cos(theta), std::sin(theta)}, {-std::sin(theta), std::cos(theta)}};
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return max_abs(a - b); }

}  // namespace fmica::test
