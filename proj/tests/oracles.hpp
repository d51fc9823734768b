// Independent moment oracles: densities written out here and integrated by
// adaptive quadrature.
#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <numbers>

#include "fmica/sources.hpp"

namespace fmica::oracle {

struct RawMoments {
  double m1, m2, m3, m4, m6;
};

/// Integral of f over (0, inf).
inline double half_line(const std::function<double(double)>& f) {
  boost::math::quadrature::exp_sinh<double> q;
  // Far tails underflow to 0 * inf; the true integrand is 0 there.
  auto g = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  return q.integrate(g, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
}

/// Density of the standardized source, written directly from each family's
/// textbook form.
inline double density(const SourceSpec& s, double z) {
  using std::numbers::pi;
  switch (s.family) {
    case Family::Gaussian: return std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi);
    case Family::Exponential: return z > -1.0 ? std::exp(-(z + 1.0)) : 0.0;
    case Family::Logistic: {
      const double sc = std::sqrt(3.0) / pi;
      const double e = std::exp(-std::abs(z) / sc);
      return e / (sc * (1.0 + e) * (1.0 + e));
    }
    case Family::Uniform: return std::abs(z) < std::sqrt(3.0) ? 1.0 / (2.0 * std::sqrt(3.0)) : 0.0;
    case Family::ExpPower: {
      const double b = s.shape;
      const double a = std::sqrt(std::tgamma(1.0 / b) / std::tgamma(3.0 / b));
      return b / (2.0 * a * std::tgamma(1.0 / b)) * std::exp(-std::pow(std::abs(z) / a, b));
    }
    case Family::Gamma: {
      const double a = s.shape;
      const double g = a + std::sqrt(a) * z;
      if (g <= 0.0) return 0.0;
      return std::sqrt(a) * std::exp((a - 1.0) * std::log(g) - g - std::lgamma(a));
    }
  }
  return 0.0;
}

/// E z^r by quadrature, splitting at the support's natural points.
inline double moment(const SourceSpec& s, int r) {
  auto pw = [r](double z) { return std::pow(z, r); };
  switch (s.family) {
    case Family::Uniform: {
      const double h = std::sqrt(3.0);
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          [&](double z) { return pw(z) * density(s, z); }, -h, h, 15, 1e-14);
    }
    case Family::Exponential:
      // z = e - 1 with e ~ Exp(1).
      return half_line([&](double e) { return std::pow(e - 1.0, r) * std::exp(-e); });
    case Family::Gamma: {
      const double a = s.shape;
      // z = (g - a) / sqrt(a) with g ~ Gamma(a, 1).
      return half_line([&](double g) {
        return std::pow((g - a) / std::sqrt(a), r) * std::exp((a - 1.0) * std::log(g) - g - std::lgamma(a));
      });
    }
    default: {
      const double pos = half_line([&](double z) { return pw(z) * density(s, z); });
      const double neg = half_line([&](double z) { return pw(-z) * density(s, -z); });
      return pos + neg;
    }
  }
}

inline RawMoments moments(const SourceSpec& s) {
  return {moment(s, 1), moment(s, 2), moment(s, 3), moment(s, 4), moment(s, 6)};
}

inline double total_mass(const SourceSpec& s) { return moment(s, 0); }

}  // namespace fmica::oracle
