// Random moment grid shared by the ASV identity checks.
#pragma once

#include <vector>

#include "fmica/rng.hpp"
#include "fmica/sources.hpp"

namespace fmica::test {

/// n seeded source specs mixing named families and random shapes, all with
/// nonzero kurtosis.
inline std::vector<SourceSpec> random_specs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SourceSpec> out;
  while (out.size() < n) {
    const double u = rng.uniform();
    SourceSpec s;
    if (u < 0.15) s = SourceSpec::exponential();
    else if (u < 0.25) s = SourceSpec::logistic();
    else if (u < 0.35) s = SourceSpec::uniform();
    else if (u < 0.7) s = SourceSpec::exp_power(0.5 + 9.5 * rng.uniform());
    else s = SourceSpec::gamma(0.3 + 9.7 * rng.uniform());
    if (analytic_moments(s).kappa != 0.0) out.push_back(s);
  }
  return out;
}

}  // namespace fmica::test
