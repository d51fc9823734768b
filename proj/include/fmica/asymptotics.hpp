// SPDX-License-Identifier: Apache-2.0
//
// Closed-form asymptotic variances of sqrt(n)(W_hat - I) at the independent
// sources, for the four estimators, and the pairwise comparison criterion
// ASV(w_kl) + ASV(w_lk).
//
// Index convention: in every AsvPair the first moment argument plays "k"
// (row index of w_kl) and the second plays "l". For deflation-based FastICA
// "k" is also the component extracted first.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fmica/error.hpp"
#include "fmica/estimators.hpp"
#include "fmica/sources.hpp"

namespace fmica {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct AsvPair {
  Method method = Method::FasticaDeflation;
  double asv_kl = kInf;
  double asv_lk = kInf;
  double sum = kInf;
  bool finite = false;
};

namespace detail {
inline AsvPair make_pair(Method m, double kl, double lk) {
  AsvPair r{m, kl, lk, kl + lk, std::isfinite(kl) && std::isfinite(lk)};
  if (!r.finite) r.sum = kInf;
  return r;
}

inline void require_not_both_gaussian(const SourceMoments& a, const SourceMoments& b) {
  if (a.kappa == 0.0 && b.kappa == 0.0)
    throw Error(ErrorKind::BothGaussian, "both components have zero excess kurtosis");
}

/// (sigma^2 - (kappa + 3)^2) / kappa^2, the deflation building block.
inline double deflation_term(const SourceMoments& m) {
  if (m.kappa == 0.0) return kInf;
  return (m.sigma2 - (m.kappa + 3.0) * (m.kappa + 3.0)) / (m.kappa * m.kappa);
}
}  // namespace detail

/// Deflation-based FastICA with k extracted before l:
/// ASV(w_kl) = (s_k^2 - (k_k+3)^2)/k_k^2, ASV(w_lk) = same + 1.
inline AsvPair asv_deflation(const SourceMoments& mk, const SourceMoments& ml) {
  detail::require_not_both_gaussian(mk, ml);
  const double t = detail::deflation_term(mk);
  return detail::make_pair(Method::FasticaDeflation, t, t + 1.0);
}

/// Deflation with the extraction order of the functional: larger |kappa| first.
/// Returns the pair for the arguments in the order given.
inline AsvPair asv_deflation_ordered(const SourceMoments& mk, const SourceMoments& ml) {
  if (std::abs(mk.kappa) >= std::abs(ml.kappa)) return asv_deflation(mk, ml);
  AsvPair r = asv_deflation(ml, mk);
  std::swap(r.asv_kl, r.asv_lk);
  return r;
}

inline AsvPair asv_symmetric(const SourceMoments& mk, const SourceMoments& ml) {
  detail::require_not_both_gaussian(mk, ml);
  const double d = (std::abs(mk.kappa) + std::abs(ml.kappa));
  const double common = mk.sigma2 + ml.sigma2 - 6.0 * (mk.kappa + ml.kappa) - 18.0;
  return detail::make_pair(Method::FasticaSymmetric, (common - mk.kappa * mk.kappa) / (d * d),
                           (common - ml.kappa * ml.kappa) / (d * d));
}

/// FOBI with the remaining p - 2 components given explicitly.
inline AsvPair asv_fobi(const SourceMoments& mk, const SourceMoments& ml, std::span<const SourceMoments> others,
                        std::size_t p) {
  if (p < 2 || others.size() + 2 != p)
    throw Error(ErrorKind::InvalidInput, "asv_fobi: expected p - 2 = " + std::to_string(p < 2 ? 0 : p - 2) +
                                             " other components, got " + std::to_string(others.size()));
  if (mk.kappa == ml.kappa) return detail::make_pair(Method::Fobi, kInf, kInf);
  double rest = 0.0;
  for (const auto& m : others) rest += m.kappa;
  const double d = (mk.kappa - ml.kappa) * (mk.kappa - ml.kappa);
  const double common = mk.sigma2 + ml.sigma2 - 6.0 * (mk.kappa + ml.kappa) - 22.0 +
                        2.0 * static_cast<double>(p) + rest;
  return detail::make_pair(Method::Fobi, (common - mk.kappa * mk.kappa) / d, (common - ml.kappa * ml.kappa) / d);
}

/// FOBI with every other kurtosis at its minimum -2; exact when p = 2.
inline AsvPair asv_fobi_lower_bound(const SourceMoments& mk, const SourceMoments& ml, std::size_t p = 2) {
  if (p < 2) throw Error(ErrorKind::InvalidInput, "asv_fobi_lower_bound: p must be at least 2");
  SourceMoments floor;
  floor.kappa = -2.0;
  floor.beta4 = 1.0;
  const std::vector<SourceMoments> others(p - 2, floor);
  return asv_fobi(mk, ml, others, p);
}

inline AsvPair asv_jade(const SourceMoments& mk, const SourceMoments& ml) {
  detail::require_not_both_gaussian(mk, ml);
  const double kk = mk.kappa * mk.kappa, kl = ml.kappa * ml.kappa;
  const double d = (kk + kl) * (kk + kl);
  auto one = [&](const SourceMoments& a, const SourceMoments& b) {
    const double ka2 = a.kappa * a.kappa, kb2 = b.kappa * b.kappa;
    return (ka2 * (a.sigma2 - ka2 - 6.0 * a.kappa - 9.0) + kb2 * (b.sigma2 - 6.0 * b.kappa - 9.0)) / d;
  };
  return detail::make_pair(Method::JadeJacobi, one(mk, ml), one(ml, mk));
}

/// ASV(w_kk) = (kappa + 2) / 4, identical for all four estimators.
inline double asv_diag(const SourceMoments& m) { return (m.kappa + 2.0) / 4.0; }

/// p x p matrix of ASV(w_kl) for the given sources and method (FOBI exact,
/// deflation extracting in descending |kappa| order, stable on ties).
inline Matrix asv_matrix(Method method, std::span<const SourceMoments> m) {
  const std::size_t p = m.size();
  Matrix a(p, p);
  std::vector<std::size_t> rank(p);
  {
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return std::abs(m[x].kappa) > std::abs(m[y].kappa); });
    for (std::size_t r = 0; r < p; ++r) rank[order[r]] = r;
  }
  for (std::size_t k = 0; k < p; ++k) {
    a(k, k) = asv_diag(m[k]);
    for (std::size_t l = k + 1; l < p; ++l) {
      AsvPair pr;
      switch (method) {
        case Method::FasticaDeflation:
          if (rank[k] < rank[l]) {
            pr = asv_deflation(m[k], m[l]);
          } else {
            pr = asv_deflation(m[l], m[k]);
            std::swap(pr.asv_kl, pr.asv_lk);
          }
          break;
        case Method::FasticaSymmetric: pr = asv_symmetric(m[k], m[l]); break;
        case Method::Fobi: {
          std::vector<SourceMoments> others;
          for (std::size_t j = 0; j < p; ++j)
            if (j != k && j != l) others.push_back(m[j]);
          pr = asv_fobi(m[k], m[l], others, p);
          break;
        }
        case Method::JadeJacobi:
        case Method::JadeFixedPoint: pr = asv_jade(m[k], m[l]); break;
      }
      a(k, l) = pr.asv_kl;
      a(l, k) = pr.asv_lk;
    }
  }
  return a;
}

struct AsvTableRow {
  std::string label;
  double dfica, sfica, fobi, jade;
};

struct AsvTable {
  std::vector<AsvTableRow> rows;
};

/// The 14 pairs over EX, L, U, EP(4), G in reading order.
inline std::vector<std::array<SourceSpec, 2>> table1_pairs() {
  const SourceSpec fam[] = {SourceSpec::exponential(), SourceSpec::logistic(), SourceSpec::uniform(),
                            SourceSpec::exp_power(4.0), SourceSpec::gaussian()};
  std::vector<std::array<SourceSpec, 2>> pairs;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i; j < 5; ++j)
      if (!(i == 4 && j == 4)) pairs.push_back({fam[i], fam[j]});
  return pairs;
}

/// Unrounded criterion sums; FOBI uses the bivariate value.
inline AsvTable table1() {
  AsvTable t;
  for (const auto& [a, b] : table1_pairs()) {
    const SourceMoments ma = analytic_moments(a), mb = analytic_moments(b);
    t.rows.push_back({label(a) + "-" + label(b), asv_deflation_ordered(ma, mb).sum, asv_symmetric(ma, mb).sum,
                      asv_fobi_lower_bound(ma, mb, 2).sum, asv_jade(ma, mb).sum});
  }
  return t;
}

/// Criterion sum for a bivariate pair; +inf when undefined, never throws.
inline double criterion_sum(Method method, const SourceMoments& a, const SourceMoments& b) {
  if (a.kappa == 0.0 && b.kappa == 0.0) return kInf;
  switch (method) {
    case Method::FasticaDeflation: return asv_deflation_ordered(a, b).sum;
    case Method::FasticaSymmetric: return asv_symmetric(a, b).sum;
    case Method::Fobi: return asv_fobi_lower_bound(a, b, 2).sum;
    case Method::JadeJacobi:
    case Method::JadeFixedPoint: return asv_jade(a, b).sum;
  }
  return kInf;
}

struct GridAxis {
  Family family = Family::ExpPower;
  double lo = 1.0;
  double hi = 8.0;
  std::size_t steps = 101;

  double at(std::size_t i) const {
    return steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
};

struct GridCell {
  double shape1, shape2, value;
  bool finite;
};

/// Row-major grid (axis 1 outer) of criterion sums over two shape families.
inline std::vector<GridCell> asv_grid(Method method, const GridAxis& axis1, const GridAxis& axis2) {
  for (const GridAxis* ax : {&axis1, &axis2}) {
    if (ax->steps == 0) throw Error(ErrorKind::InvalidInput, "empty grid");
    if (ax->family != Family::ExpPower && ax->family != Family::Gamma)
      throw Error(ErrorKind::InvalidInput, "grid axes must be ep or gamma families");
    if (!(ax->lo > 0.0) || !(ax->hi >= ax->lo))
      throw Error(ErrorKind::InvalidInput, "grid shape range must be positive and ordered");
  }
  std::vector<GridCell> cells;
  cells.reserve(axis1.steps * axis2.steps);
  for (std::size_t i = 0; i < axis1.steps; ++i) {
    const double s1 = axis1.at(i);
    const SourceMoments m1 = analytic_moments({axis1.family, s1});
    for (std::size_t j = 0; j < axis2.steps; ++j) {
      const double s2 = axis2.at(j);
      const SourceMoments m2 = analytic_moments({axis2.family, s2});
      const double v = criterion_sum(method, m1, m2);
      cells.push_back({s1, s2, v, std::isfinite(v)});
    }
  }
  return cells;
}

}  // namespace fmica
