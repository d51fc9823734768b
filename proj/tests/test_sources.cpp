#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "support.hpp"

using namespace fmica;

namespace {

std::vector<SourceSpec> shape_grid() {
  std::vector<SourceSpec> g = {SourceSpec::gaussian(), SourceSpec::exponential(), SourceSpec::logistic(),
                               SourceSpec::uniform()};
  for (double b : {0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 20.0}) g.push_back(SourceSpec::exp_power(b));
  for (double a : {0.3, 0.5, 1.0, 2.0, 5.0, 10.0}) g.push_back(SourceSpec::gamma(a));
  return g;
}

void expect_rel(double actual, double expected, double tol) {
  EXPECT_LE(std::abs(actual - expected), tol * std::max(1.0, std::abs(expected))) << actual << " vs " << expected;
}

struct SampleStats {
  double mean, var, kurt, kurt_se;
};

SampleStats sample_stats(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - mu;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double beta = m4 / (m2 * m2), gamma = m3 / std::pow(m2, 1.5);
  // Influence function of the standardized fourth moment.
  double s = 0.0, s2 = 0.0;
  for (double v : x) {
    const double z = (v - mu) / std::sqrt(m2);
    const double psi = z * z * z * z - beta - 4.0 * gamma * z - 2.0 * beta * (z * z - 1.0);
    s += psi;
    s2 += psi * psi;
  }
  const double var_psi = s2 / n - (s / n) * (s / n);
  return {mu, m2, beta - 3.0, std::sqrt(var_psi / n)};
}

}  // namespace

TEST(AnalyticMoments, NamedFamilies) {
  const auto g = analytic_moments(SourceSpec::gaussian());
  EXPECT_EQ(g.gamma, 0.0);
  EXPECT_EQ(g.kappa, 0.0);
  EXPECT_EQ(g.sigma2, 15.0);
  const auto ex = analytic_moments(SourceSpec::exponential());
  EXPECT_EQ(ex.gamma, 2.0);
  EXPECT_EQ(ex.kappa, 6.0);
  EXPECT_EQ(ex.sigma2, 261.0);
  const auto l = analytic_moments(SourceSpec::logistic());
  EXPECT_NEAR(l.kappa, 1.2, 1e-15);
  EXPECT_NEAR(l.sigma2, 837.0 / 21.0, 1e-12);
  const auto u = analytic_moments(SourceSpec::uniform());
  EXPECT_NEAR(u.kappa, -1.2, 1e-15);
  EXPECT_NEAR(u.sigma2, 27.0 / 7.0, 1e-15);
  const auto ep = analytic_moments(SourceSpec::exp_power(4.0));
  EXPECT_NEAR(ep.kappa, -0.8116, 1e-4);
}

TEST(AnalyticMoments, AgreeWithQuadratureOracle) {
  for (const SourceSpec& s : shape_grid()) {
    SCOPED_TRACE(to_spec_string(s));
    const auto a = analytic_moments(s);
    const auto q = oracle::moments(s);
    EXPECT_NEAR(q.m1, 0.0, 1e-9);
    expect_rel(q.m2, 1.0, 1e-9);
    expect_rel(a.gamma, q.m3, 1e-7);
    expect_rel(a.beta4, q.m4, 1e-7);
    expect_rel(a.sixth(), q.m6, 1e-7);
  }
}

TEST(AnalyticMoments, MomentInequalities) {
  for (const SourceSpec& s : shape_grid()) {
    const auto m = analytic_moments(s);
    EXPECT_GE(m.beta4, 1.0 + m.gamma * m.gamma);
    EXPECT_GE(m.kappa, -2.0);
    EXPECT_GT(m.sigma2, 0.0);
  }
}

TEST(AnalyticMoments, SpecialShapesReduceExactly) {
  const auto g1 = analytic_moments(SourceSpec::gamma(1.0));
  const auto ex = analytic_moments(SourceSpec::exponential());
  EXPECT_EQ(g1.gamma, ex.gamma);
  EXPECT_EQ(g1.kappa, ex.kappa);
  EXPECT_EQ(g1.sigma2, ex.sigma2);
  const auto ep2 = analytic_moments(SourceSpec::exp_power(2.0));
  const auto g = analytic_moments(SourceSpec::gaussian());
  EXPECT_EQ(ep2.kappa, g.kappa);
  EXPECT_EQ(ep2.sigma2, g.sigma2);
  for (double a : {0.5, 2.0, 3.0, 7.5}) EXPECT_NEAR(analytic_moments(SourceSpec::gamma(a)).kappa, 6.0 / a, 1e-14);
}

TEST(AnalyticMoments, InvalidShape) {
  EXPECT_THROW(analytic_moments(SourceSpec::gamma(0.0)), Error);
  EXPECT_THROW(analytic_moments(SourceSpec::exp_power(-1.0)), Error);
}

TEST(EpDensity, IntegratesToOneWithUnitVariance) {
  for (double b : {0.8, 1.0, 2.0, 4.0, 8.0}) {
    auto f = [b](double x) { return ep_sampler_density(b, x); };
    const double mass = 2.0 * oracle::half_line(f);
    const double var = 2.0 * oracle::half_line([&](double x) { return x * x * f(x); });
    EXPECT_NEAR(mass, 1.0, 1e-8) << b;
    EXPECT_NEAR(var, 1.0, 1e-8) << b;
  }
}

TEST(EpDensity, SpecialShapes) {
  for (double x = -4.0; x <= 4.0; x += 0.25) {
    EXPECT_NEAR(ep_sampler_density(2.0, x), std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi), 1e-12);
    // Laplace with unit variance: scale 1/sqrt 2.
    EXPECT_NEAR(ep_sampler_density(1.0, x), std::exp(-std::sqrt(2.0) * std::abs(x)) / std::sqrt(2.0), 1e-12);
  }
  EXPECT_THROW(ep_sampler_density(0.0, 1.0), Error);
}

TEST(Sampler, LawOfLargeNumbers) {
  const std::size_t n = 1000000;
  const SourceSpec specs[] = {SourceSpec::gaussian(), SourceSpec::exponential(), SourceSpec::logistic(),
                              SourceSpec::uniform(),  SourceSpec::exp_power(4.0),  SourceSpec::exp_power(1.0),
                              SourceSpec::gamma(0.5), SourceSpec::gamma(3.0)};
  std::uint64_t seed = 100;
  for (const SourceSpec& s : specs) {
    SCOPED_TRACE(to_spec_string(s));
    Rng rng(seed++);
    const auto x = sample(s, n, rng);
    const auto m = analytic_moments(s);
    const SampleStats st = sample_stats(x);
    EXPECT_NEAR(st.mean, 0.0, 4.0 / std::sqrt(double(n)));
    EXPECT_NEAR(st.var, 1.0, 4.0 * std::sqrt((m.beta4 - 1.0) / n));
    EXPECT_NEAR(st.kurt, m.kappa, 4.0 * st.kurt_se);
  }
}

TEST(Sampler, LargeShapeExpPowerIsNearlyUniform) {
  Rng rng(7);
  const auto x = sample(SourceSpec::exp_power(50.0), 100000, rng);
  EXPECT_NEAR(sample_stats(x).kurt, -1.2, 0.1);
  for (double v : x) EXPECT_LT(std::abs(v), 1.9);
}

TEST(Sampler, DeterministicPerSeed) {
  Rng a(42), b(42), c(43);
  const auto x = sample(SourceSpec::gamma(2.0), 1000, a);
  EXPECT_EQ(x, sample(SourceSpec::gamma(2.0), 1000, b));
  EXPECT_NE(x, sample(SourceSpec::gamma(2.0), 1000, c));
  Rng d(1);
  EXPECT_THROW(sample(SourceSpec::gaussian(), 0, d), Error);
}

TEST(SpecStrings, ParseAndFormat) {
  EXPECT_EQ(parse_source("ex"), SourceSpec::exponential());
  EXPECT_EQ(parse_source("EP:4.0"), SourceSpec::exp_power(4.0));
  EXPECT_EQ(parse_source("gamma:0.5"), SourceSpec::gamma(0.5));
  EXPECT_THROW(parse_source("ep"), Error);
  EXPECT_THROW(parse_source("g:2"), Error);
  EXPECT_THROW(parse_source("cauchy"), Error);
  EXPECT_THROW(parse_source("gamma:-1"), Error);
  const auto list = parse_source_list("ex, u ,ep:4");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(label(list[2]), "EP");
  EXPECT_EQ(label(SourceSpec::exp_power(2.5)), "EP(2.5)");
  for (const auto& s : shape_grid()) EXPECT_EQ(parse_source(to_spec_string(s)), s);
  EXPECT_THROW(parse_source_list("ex,,u"), Error);
}
