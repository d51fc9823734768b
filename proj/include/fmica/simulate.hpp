// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo harness: draw IC-model samples x = Omega z, run estimators,
// align the gain matrices W_hat Omega to the identity and compare scaled
// empirical variances with the closed-form ASVs.
//
// Replicate r draws from Rng::stream(seed, r), so a scenario's output does
// not depend on the number of worker threads.
#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fmica/asymptotics.hpp"
#include "fmica/csv.hpp"
#include "fmica/estimators.hpp"
#include "fmica/moments.hpp"
#include "fmica/rng.hpp"
#include "fmica/sources.hpp"

namespace fmica {

enum class Mixing { Identity, Random };

struct ScenarioConfig {
  std::vector<SourceSpec> sources;
  Mixing mixing = Mixing::Random;
  std::size_t n = 1000;
  std::size_t replicates = 100;
  std::vector<Method> methods = {Method::FasticaDeflation, Method::FasticaSymmetric, Method::Fobi,
                                 Method::JadeJacobi};
  std::uint64_t seed = 1;
  Vector location;  // optional mu; empty means 0
  EstimatorOptions options;

  std::size_t p() const { return sources.size(); }

  void validate() const {
    if (sources.size() < 2) throw Error(ErrorKind::InvalidInput, "scenario needs at least two sources");
    if (n <= 10 * sources.size()) throw Error(ErrorKind::InvalidInput, "scenario needs n > 10 p");
    if (replicates == 0) throw Error(ErrorKind::InvalidInput, "scenario needs at least one replicate");
    if (methods.empty()) throw Error(ErrorKind::InvalidInput, "scenario needs at least one method");
    if (!location.empty() && location.size() != sources.size())
      throw Error(ErrorKind::InvalidInput, "location length must equal the number of sources");
    for (const auto& s : sources) validate_source(s);
  }

 private:
  static void validate_source(const SourceSpec& s) { fmica::validate(s); }
};

/// Parses `key = value` lines; `#` starts a comment. Keys: sources, n,
/// replicates, methods, seed, mixing (identity | random).
inline ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig cfg;
  bool have_sources = false;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  auto parse_uint = [&](const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw Error(ErrorKind::InvalidInput, "scenario line " + std::to_string(line_no) + ": bad value for '" +
                                               key + "': '" + v + "'");
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::InvalidInput, "scenario line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "sources") {
      cfg.sources = parse_source_list(value);
      have_sources = true;
    } else if (key == "n") {
      cfg.n = parse_uint(key, value);
    } else if (key == "replicates") {
      cfg.replicates = parse_uint(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_uint(key, value);
    } else if (key == "mixing") {
      if (value == "identity") cfg.mixing = Mixing::Identity;
      else if (value == "random") cfg.mixing = Mixing::Random;
      else throw Error(ErrorKind::InvalidInput, "scenario key 'mixing': expected identity or random");
    } else if (key == "methods") {
      cfg.methods.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.methods.push_back(parse_method(trim(item)));
    } else {
      throw Error(ErrorKind::InvalidInput, "unknown scenario key '" + key + "'");
    }
  }
  if (!have_sources) throw Error(ErrorKind::InvalidInput, "scenario key 'sources' is required");
  cfg.validate();
  return cfg;
}

struct GainMatrix {
  Matrix G;
  bool aligned = false;
};

/// Greedy matching of rows to sources by largest remaining |G_kl|, then row
/// signs making the diagonal positive. Throws AmbiguousAlignment when a
/// competing entry in the same row or column is within 1e-9 of the pick.
inline GainMatrix align(const GainMatrix& raw) {
  const Matrix& g = raw.G;
  const std::size_t p = g.rows();
  if (!g.square()) throw Error(ErrorKind::InvalidInput, "align needs a square gain matrix");
  std::vector<bool> row_used(p, false), col_used(p, false);
  std::vector<std::size_t> target(p);
  for (std::size_t step = 0; step < p; ++step) {
    std::size_t bk = 0, bl = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < p; ++k) {
      if (row_used[k]) continue;
      for (std::size_t l = 0; l < p; ++l)
        if (!col_used[l] && std::abs(g(k, l)) > best) {
          best = std::abs(g(k, l));
          bk = k;
          bl = l;
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (!col_used[j] && j != bl && best - std::abs(g(bk, j)) < 1e-9)
        throw Error(ErrorKind::AmbiguousAlignment, "two sources compete for one estimated component");
      if (!row_used[j] && j != bk && best - std::abs(g(j, bl)) < 1e-9)
        throw Error(ErrorKind::AmbiguousAlignment, "two estimated components compete for one source");
    }
    row_used[bk] = col_used[bl] = true;
    target[bl] = bk;
  }
  GainMatrix out{Matrix(p, p), true};
  for (std::size_t l = 0; l < p; ++l) {
    const std::size_t k = target[l];
    const double s = g(k, l) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < p; ++j) out.G(l, j) = s * g(k, j);
  }
  return out;
}

/// Nonsingular Gaussian mixing matrix with condition number below 100.
inline Matrix random_mixing(std::size_t p, Rng& rng) {
  for (;;) {
    Matrix a(p, p);
    for (double& v : a.data()) v = rng.normal();
    const SymEigen e = sym_eigen(a.transpose() * a);
    if (e.eigenvalues.back() > 0.0 && e.eigenvalues.front() / e.eigenvalues.back() < 1e4) return a;
  }
}

struct ReplicateSample {
  DataMatrix z;
  Matrix mixing;
  DataMatrix x;
};

inline ReplicateSample draw_replicate(const ScenarioConfig& cfg, std::uint64_t index) {
  Rng rng = Rng::stream(cfg.seed, index);
  const std::size_t p = cfg.p();
  Matrix z(p, cfg.n);
  for (std::size_t k = 0; k < p; ++k) {
    const auto draws = sample(cfg.sources[k], cfg.n, rng);
    std::copy(draws.begin(), draws.end(), z.row(k).begin());
  }
  Matrix omega = cfg.mixing == Mixing::Identity ? Matrix::identity(p) : random_mixing(p, rng);
  DataMatrix zd(std::move(z));
  const Vector mu = cfg.location.empty() ? Vector(p, 0.0) : cfg.location;
  DataMatrix xd = affine_transform(omega, mu, zd);
  return {std::move(zd), std::move(omega), std::move(xd)};
}

enum class ReplicateStatus { Ok, NotConverged, Ambiguous };

struct ReplicateResult {
  std::vector<ReplicateStatus> status;  // per method
  std::vector<Matrix> gains;            // aligned gain per method (empty when not Ok)
  double whiteness_error = 0.0;         // max over converged methods of |W S W' - I|
};

inline ReplicateResult run_replicate(const ScenarioConfig& cfg, std::uint64_t index) {
  const ReplicateSample rep = draw_replicate(cfg, index);
  const WhitenedSample w = whiten(rep.x);
  const Matrix cov = sample_covariance(rep.x);
  ReplicateResult out;
  for (Method m : cfg.methods) {
    const UnmixingEstimate est = estimate(m, w, cfg.options);
    if (!est.converged) {
      out.status.push_back(ReplicateStatus::NotConverged);
      out.gains.emplace_back();
      continue;
    }
    out.whiteness_error = std::max(
        out.whiteness_error, max_abs(est.W * cov * est.W.transpose() - Matrix::identity(cfg.p())));
    try {
      out.gains.push_back(align({est.W * rep.mixing, false}).G);
      out.status.push_back(ReplicateStatus::Ok);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AmbiguousAlignment) throw;
      out.status.push_back(ReplicateStatus::Ambiguous);
      out.gains.emplace_back();
    }
  }
  return out;
}

struct MethodSummary {
  Method method;
  Matrix empirical;  // off-diagonal: n mean(g_kl^2); diagonal: n var(g_kk - 1)
  Matrix analytic;   // ASV(w_kl)
  std::size_t n_converged = 0;
  std::size_t n_not_converged = 0;
  std::size_t n_ambiguous = 0;

  double empirical_offdiag_sum() const {
    double s = 0.0;
    for (std::size_t k = 0; k < empirical.rows(); ++k)
      for (std::size_t l = 0; l < empirical.cols(); ++l)
        if (k != l) s += empirical(k, l);
    return s;
  }
  double analytic_offdiag_sum() const {
    double s = 0.0;
    for (std::size_t k = 0; k < analytic.rows(); ++k)
      for (std::size_t l = 0; l < analytic.cols(); ++l)
        if (k != l) s += analytic(k, l);
    return s;
  }
  double nonconvergence_rate() const {
    const double total = static_cast<double>(n_converged + n_not_converged + n_ambiguous);
    return total > 0 ? static_cast<double>(n_not_converged) / total : 0.0;
  }
};

struct ScenarioSummary {
  ScenarioConfig config;
  std::vector<MethodSummary> methods;
  double max_whiteness_error = 0.0;

  const MethodSummary& operator[](Method m) const {
    for (const auto& s : methods)
      if (s.method == m) return s;
    throw Error(ErrorKind::InvalidInput, "method not in scenario: " + std::string(method_name(m)));
  }
};

/// Runs every replicate (on `threads` workers) and reduces in replicate order.
inline ScenarioSummary run_scenario(const ScenarioConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  const std::size_t p = cfg.p();
  std::vector<ReplicateResult> results(cfg.replicates);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= cfg.replicates) return;
      try {
        results[r] = run_replicate(cfg, r);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(
              Error(ErrorKind::InvalidInput, "replicate " + std::to_string(r) + ": " + e.what()));
        next = cfg.replicates;
        return;
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SourceMoments> moments;
  for (const auto& s : cfg.sources) moments.push_back(analytic_moments(s));

  ScenarioSummary summary{cfg, {}, 0.0};
  const double n = static_cast<double>(cfg.n);
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    MethodSummary ms{cfg.methods[mi], Matrix(p, p), asv_matrix(cfg.methods[mi], moments)};
    Matrix sum_sq(p, p), sum_diag(p, 1);
    for (const auto& rr : results) {
      summary.max_whiteness_error = std::max(summary.max_whiteness_error, rr.whiteness_error);
      switch (rr.status[mi]) {
        case ReplicateStatus::NotConverged: ++ms.n_not_converged; continue;
        case ReplicateStatus::Ambiguous: ++ms.n_ambiguous; continue;
        case ReplicateStatus::Ok: ++ms.n_converged; break;
      }
      const Matrix& g = rr.gains[mi];
      for (std::size_t k = 0; k < p; ++k)
        for (std::size_t l = 0; l < p; ++l) {
          const double d = k == l ? g(k, l) - 1.0 : g(k, l);
          sum_sq(k, l) += d * d;
          if (k == l) sum_diag(k, 0) += d;
        }
    }
    const double r = static_cast<double>(ms.n_converged);
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t l = 0; l < p; ++l) {
        if (ms.n_converged == 0) {
          ms.empirical(k, l) = std::nan("");
        } else if (k == l) {
          const double mean = sum_diag(k, 0) / r;
          ms.empirical(k, k) = n * (sum_sq(k, k) / r - mean * mean);
        } else {
          ms.empirical(k, l) = n * sum_sq(k, l) / r;
        }
      }
    summary.methods.push_back(std::move(ms));
  }
  return summary;
}

struct DiagCheck {
  Method method;
  std::size_t component;
  double empirical;
  double target;
  double ratio() const { return empirical / target; }
};

/// Diagonal entries of a summary against (kappa_k + 2) / 4.
inline std::vector<DiagCheck> diag_variance_check(const ScenarioSummary& s) {
  std::vector<DiagCheck> out;
  for (const auto& ms : s.methods)
    for (std::size_t k = 0; k < ms.empirical.rows(); ++k)
      out.push_back({ms.method, k, ms.empirical(k, k), asv_diag(analytic_moments(s.config.sources[k]))});
  return out;
}

inline std::vector<DiagCheck> diag_variance_check(const ScenarioConfig& cfg, unsigned threads = 1) {
  return diag_variance_check(run_scenario(cfg, threads));
}

/// CSV columns: method, entry, empirical, analytic, ratio, n_converged.
inline void write_summary_csv(std::ostream& out, const ScenarioSummary& s) {
  out << "method,entry,empirical,analytic,ratio,n_converged\n";
  for (const auto& ms : s.methods) {
    const std::size_t p = ms.empirical.rows();
    auto row = [&](const std::string& entry, double emp, double ana) {
      out << method_name(ms.method) << ',' << entry << ',' << csv::format_number(emp) << ','
          << csv::format_number(ana) << ',' << csv::format_number(emp / ana) << ',' << ms.n_converged << '\n';
    };
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t l = 0; l < p; ++l)
        row("g" + std::to_string(k + 1) + std::to_string(l + 1), ms.empirical(k, l), ms.analytic(k, l));
    row("offdiag_sum", ms.empirical_offdiag_sum(), ms.analytic_offdiag_sum());
  }
}

}  // namespace fmica
