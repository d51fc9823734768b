// SPDX-License-Identifier: Apache-2.0
//
// Standardized (mean 0, variance 1) univariate source distributions with
// closed-form moments and seeded samplers.
#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "fmica/error.hpp"
#include "fmica/rng.hpp"

namespace fmica {

enum class Family { Gaussian, Exponential, Logistic, Uniform, ExpPower, Gamma };

struct SourceSpec {
  Family family = Family::Gaussian;
  double shape = 0.0;  // ExpPower beta or Gamma alpha; unused otherwise

  static SourceSpec gaussian() { return {Family::Gaussian, 0.0}; }
  static SourceSpec exponential() { return {Family::Exponential, 0.0}; }
  static SourceSpec logistic() { return {Family::Logistic, 0.0}; }
  static SourceSpec uniform() { return {Family::Uniform, 0.0}; }
  static SourceSpec exp_power(double beta) { return {Family::ExpPower, beta}; }
  static SourceSpec gamma(double alpha) { return {Family::Gamma, alpha}; }

  bool has_shape() const noexcept { return family == Family::ExpPower || family == Family::Gamma; }

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

inline void validate(const SourceSpec& s) {
  if (s.has_shape() && !(s.shape > 0.0 && std::isfinite(s.shape)))
    throw Error(ErrorKind::InvalidInput, "shape parameter must be positive");
}

namespace detail {
inline double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorKind::InvalidInput, "cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  return v;
}
}  // namespace detail

/// Parses `ex`, `l`, `u`, `g`, `ep:<beta>`, `gamma:<alpha>` (case-insensitive family).
inline SourceSpec parse_source(std::string_view text) {
  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto colon = lower.find(':');
  const std::string name = lower.substr(0, colon);
  SourceSpec spec;
  if (name == "ex") spec = SourceSpec::exponential();
  else if (name == "l") spec = SourceSpec::logistic();
  else if (name == "u") spec = SourceSpec::uniform();
  else if (name == "g") spec = SourceSpec::gaussian();
  else if (name == "ep") spec.family = Family::ExpPower;
  else if (name == "gamma") spec.family = Family::Gamma;
  else throw Error(ErrorKind::InvalidInput, "unknown distribution '" + std::string(text) + "'");

  if (spec.has_shape()) {
    if (colon == std::string::npos)
      throw Error(ErrorKind::InvalidInput, "distribution '" + name + "' needs a shape, e.g. " + name + ":4");
    spec.shape = detail::parse_double(std::string_view(lower).substr(colon + 1), "shape");
    validate(spec);
  } else if (colon != std::string::npos) {
    throw Error(ErrorKind::InvalidInput, "distribution '" + name + "' takes no shape");
  }
  return spec;
}

inline std::vector<SourceSpec> parse_source_list(std::string_view text) {
  std::vector<SourceSpec> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    std::size_t b = 0, e = piece.size();
    while (b < e && std::isspace(static_cast<unsigned char>(piece[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(piece[e - 1]))) --e;
    if (b == e) throw Error(ErrorKind::InvalidInput, "empty entry in distribution list");
    out.push_back(parse_source(piece.substr(b, e - b)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_shape(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Short label used in tables: EX, L, U, G, EP (EP(b) unless b == 4), Gamma(a).
inline std::string label(const SourceSpec& s) {
  switch (s.family) {
    case Family::Gaussian: return "G";
    case Family::Exponential: return "EX";
    case Family::Logistic: return "L";
    case Family::Uniform: return "U";
    case Family::ExpPower: return s.shape == 4.0 ? "EP" : "EP(" + format_shape(s.shape) + ")";
    case Family::Gamma: return "Gamma(" + format_shape(s.shape) + ")";
  }
  return "?";
}

/// Spec string accepted by parse_source.
inline std::string to_spec_string(const SourceSpec& s) {
  switch (s.family) {
    case Family::Gaussian: return "g";
    case Family::Exponential: return "ex";
    case Family::Logistic: return "l";
    case Family::Uniform: return "u";
    case Family::ExpPower: return "ep:" + format_shape(s.shape);
    case Family::Gamma: return "gamma:" + format_shape(s.shape);
  }
  return "?";
}

struct SourceMoments {
  double gamma = 0.0;   // E z^3
  double beta4 = 3.0;   // E z^4
  double kappa = 0.0;   // beta4 - 3
  double sigma2 = 15.0; // Var z^3 = E z^6 - gamma^2

  double sixth() const noexcept { return sigma2 + gamma * gamma; }
};

inline SourceMoments make_moments(double gamma, double beta4, double sixth) {
  return {gamma, beta4, beta4 - 3.0, sixth - gamma * gamma};
}

/// Closed-form standardized moments.
inline SourceMoments analytic_moments(const SourceSpec& s) {
  validate(s);
  switch (s.family) {
    case Family::Gaussian: return make_moments(0.0, 3.0, 15.0);
    case Family::Exponential:
      // Central moments of Exp(1): mu3 = 2, mu4 = 9, mu6 = 265.
      return make_moments(2.0, 9.0, 265.0);
    case Family::Logistic:
      // Standardized: mu4 = 21/5, mu6 = 31 * 27 / 21.
      return make_moments(0.0, 4.2, 837.0 / 21.0);
    case Family::Uniform:
      // On (-sqrt 3, sqrt 3): E z^4 = 9/5, E z^6 = 27/7.
      return make_moments(0.0, 1.8, 27.0 / 7.0);
    case Family::ExpPower: {
      // E|z|^r = Gamma((r+1)/b) Gamma(1/b)^{r/2 - 1} / Gamma(3/b)^{r/2}.
      const double b = s.shape;
      if (b == 2.0) return make_moments(0.0, 3.0, 15.0);
      const double l1 = std::lgamma(1.0 / b), l3 = std::lgamma(3.0 / b);
      const double m4 = std::exp(std::lgamma(5.0 / b) + l1 - 2.0 * l3);
      const double m6 = std::exp(std::lgamma(7.0 / b) + 2.0 * l1 - 3.0 * l3);
      return make_moments(0.0, m4, m6);
    }
    case Family::Gamma: {
      // Cumulants of Gamma(a, 1) are a (r-1)!.
      const double a = s.shape;
      const double mu6 = 120.0 * a + 130.0 * a * a + 15.0 * a * a * a;
      return make_moments(2.0 / std::sqrt(a), 3.0 + 6.0 / a, mu6 / (a * a * a));
    }
  }
  throw Error(ErrorKind::InvalidInput, "unknown family");
}

/// Scale alpha = sqrt(Gamma(1/b) / Gamma(3/b)) giving unit variance.
inline double ep_scale(double beta) {
  return std::exp(0.5 * (std::lgamma(1.0 / beta) - std::lgamma(3.0 / beta)));
}

/// Unit-variance exponential power density b exp(-(|x|/a)^b) / (2 a Gamma(1/b)).
inline double ep_sampler_density(double beta, double x) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw Error(ErrorKind::InvalidInput, "exponential power shape must be positive");
  const double a = ep_scale(beta);
  return beta * std::exp(-std::pow(std::abs(x) / a, beta) - std::lgamma(1.0 / beta)) / (2.0 * a);
}

/// One standardized draw.
inline double draw(const SourceSpec& s, Rng& rng) {
  switch (s.family) {
    case Family::Gaussian: return rng.normal();
    case Family::Exponential: return -std::log(rng.uniform()) - 1.0;
    case Family::Logistic: {
      const double u = rng.uniform();
      return std::numbers::sqrt3 / std::numbers::pi * std::log(u / (1.0 - u));
    }
    case Family::Uniform: return std::numbers::sqrt3 * (2.0 * rng.uniform() - 1.0);
    case Family::ExpPower: {
      // |z| / a ~ Gamma(1/b)^{1/b} with a random sign.
      const double b = s.shape;
      const double mag = ep_scale(b) * std::pow(rng.gamma(1.0 / b), 1.0 / b);
      return rng.uniform() < 0.5 ? -mag : mag;
    }
    case Family::Gamma: {
      const double a = s.shape;
      return (rng.gamma(a) - a) / std::sqrt(a);
    }
  }
  return 0.0;
}

/// n i.i.d. standardized draws.
inline std::vector<double> sample(const SourceSpec& s, std::size_t n, Rng& rng) {
  validate(s);
  if (n == 0) throw Error(ErrorKind::InvalidInput, "sample size must be positive");
  std::vector<double> out(n);
  for (double& v : out) v = draw(s, rng);
  return out;
}

}  // namespace fmica
