// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. `run` takes explicit streams so the whole CLI can
// be driven in-process by tests.
//
// Exit codes: 0 success, 1 input or usage error, 2 non-convergence (outputs
// still written), 3 undefined ASV request.
#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "fmica/asymptotics.hpp"
#include "fmica/csv.hpp"
#include "fmica/estimators.hpp"
#include "fmica/moments.hpp"
#include "fmica/simulate.hpp"
#include "fmica/sources.hpp"

namespace fmica::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitUndefined = 3;

/// Two-decimal cell for the ASV tables, "inf" when non-finite.
inline std::string fixed2(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline void write_table1(std::ostream& out) {
  out << "pair, DFICA, SFICA, FOBI, JADE\n";
  for (const auto& r : table1().rows)
    out << r.label << ", " << fixed2(r.dfica) << ", " << fixed2(r.sfica) << ", " << fixed2(r.fobi) << ", "
        << fixed2(r.jade) << '\n';
}

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "' for writing");
  return f;
}

inline std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::InvalidInput, "range must be lo:hi, got '" + text + "'");
  auto num = [&](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error(ErrorKind::InvalidInput, "bad range bound '" + s + "'");
    return v;
  };
  return {num(text.substr(0, colon)), num(text.substr(colon + 1))};
}

inline Family parse_grid_family(const std::string& name) {
  if (name == "ep") return Family::ExpPower;
  if (name == "gamma") return Family::Gamma;
  throw Error(ErrorKind::InvalidInput, "grid family must be ep or gamma, got '" + name + "'");
}

struct UnmixArgs {
  std::string input, method = "jade", output_w, output_s;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int max_iter = 2000;
  bool header = false;
};

inline int cmd_unmix(const UnmixArgs& a, std::ostream& out, std::ostream& err) {
  const Method method = parse_method(a.method);
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + a.input + "'");
  const Matrix rows = csv::read_numeric(in, a.header);
  const DataMatrix x(rows.transpose());
  const WhitenedSample w = whiten(x);

  EstimatorOptions opt;
  opt.fastica.tol = a.tol;
  opt.fastica.max_iter = a.max_iter;
  opt.fastica.seed = a.seed;
  opt.jacobi.tol = std::min(a.tol, opt.jacobi.tol);
  opt.jacobi.max_sweeps = a.max_iter;
  const UnmixingEstimate est = estimate(method, w, opt);

  if (!a.output_w.empty()) {
    auto f = open_output(a.output_w);
    csv::write_matrix(f, est.W);
  }
  if (!a.output_s.empty()) {
    // W x, one observation per row; inverse(W) maps it back to the input.
    auto f = open_output(a.output_s);
    csv::write_matrix(f, (est.W * x.values()).transpose());
  }

  int iterations = 0;
  for (int i : est.iterations) iterations += i;
  out << "method: " << method_name(est.method) << '\n'
      << "p: " << x.p() << ", n: " << x.n() << '\n'
      << "converged: " << (est.converged ? "yes" : "no") << '\n'
      << "iterations: " << iterations << '\n'
      << "restarts: " << est.restarts_used << '\n'
      << "residual: " << csv::format_number(est.residual) << '\n'
      << "kurtoses:";
  for (double k : est.component_kurtoses) out << ' ' << csv::format_number(k);
  out << '\n';
  for (const auto& wn : est.warnings) err << "warning (" << to_string(wn.kind) << "): " << wn.message << '\n';
  if (!est.converged) {
    err << "error: estimator did not converge; outputs written but flagged\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

inline int cmd_asv(const std::string& pair, std::size_t dim, const std::string& others, std::ostream& out) {
  const auto specs = parse_source_list(pair);
  if (specs.size() != 2) throw Error(ErrorKind::InvalidInput, "--pair needs exactly two distributions");
  std::vector<SourceMoments> rest;
  if (!others.empty())
    for (const auto& s : parse_source_list(others)) rest.push_back(analytic_moments(s));
  if (dim == 0) dim = 2 + rest.size();
  if (dim < 2) throw Error(ErrorKind::InvalidInput, "--dim must be at least 2");
  if (!rest.empty() && rest.size() + 2 != dim)
    throw Error(ErrorKind::InvalidInput, "--others must list dim - 2 distributions");
  const SourceMoments mk = analytic_moments(specs[0]), ml = analytic_moments(specs[1]);
  if (mk.kappa == 0.0 && ml.kappa == 0.0) {
    out << "undefined (both components Gaussian)\n";
    return kExitUndefined;
  }
  const bool exact = dim == 2 || !rest.empty();
  const AsvPair rows[] = {asv_deflation_ordered(mk, ml), asv_symmetric(mk, ml),
                          exact ? asv_fobi(mk, ml, rest, dim) : asv_fobi_lower_bound(mk, ml, dim),
                          asv_jade(mk, ml)};
  const char* names[] = {"DFICA", "SFICA", exact ? "FOBI" : "FOBI (lower bound)", "JADE"};
  out << "pair: " << label(specs[0]) << "-" << label(specs[1]) << ", p = " << dim << '\n';
  out << "method, asv_kl, asv_lk, sum\n";
  for (std::size_t i = 0; i < 4; ++i)
    out << names[i] << ", " << fixed2(rows[i].asv_kl) << ", " << fixed2(rows[i].asv_lk) << ", "
        << fixed2(rows[i].sum) << '\n';
  out << "diagonal, " << fixed2(asv_diag(mk)) << ", " << fixed2(asv_diag(ml)) << '\n';
  return kExitOk;
}

inline void write_grid(std::ostream& out, const std::vector<GridCell>& cells) {
  out << "shape1,shape2,value\n";
  for (const auto& c : cells)
    out << csv::format_number(c.shape1) << ',' << csv::format_number(c.shape2) << ','
        << csv::format_number(c.value) << '\n';
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fourth-moment ICA: estimators, asymptotic variances and simulation", "fmica"};
  app.require_subcommand(1, 1);

  detail::UnmixArgs ua;
  auto* unmix = app.add_subcommand("unmix", "estimate an unmixing matrix from a CSV file");
  unmix->add_option("--input", ua.input, "CSV file, one observation per row")->required();
  unmix->add_option("--method", ua.method, "fobi, jade, jade-fp, dfica or sfica")->capture_default_str();
  unmix->add_option("--seed", ua.seed, "seed for random restarts")->capture_default_str();
  unmix->add_option("--tol", ua.tol, "convergence tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  unmix->add_option("--max-iter", ua.max_iter, "iteration limit")->capture_default_str()->check(CLI::PositiveNumber);
  unmix->add_option("--output-w", ua.output_w, "CSV output for the unmixing matrix");
  unmix->add_option("--output-s", ua.output_s, "CSV output for the recovered sources");
  unmix->add_flag("--header", ua.header, "skip the first input line");

  std::string pair, others;
  std::size_t dim = 0;
  auto* asv = app.add_subcommand("asv", "asymptotic variances for one pair of components");
  asv->add_option("--pair", pair, "two distributions, e.g. ex,g or ep:4,gamma:2")->required();
  asv->add_option("--dim", dim, "dimension p (default 2 + number of --others)");
  asv->add_option("--others", others, "the remaining p - 2 distributions for exact FOBI values");

  auto* tab = app.add_subcommand("table1", "criterion sums for the standard 14 pairs");

  std::string method_c = "jade", fam1 = "ep", fam2 = "ep", range1 = "1:8", range2 = "1:8", output_c;
  std::size_t steps = 101;
  auto* contour = app.add_subcommand("contour", "grid of criterion sums over two shape families");
  contour->add_option("--method", method_c)->capture_default_str();
  contour->add_option("--family1", fam1, "ep or gamma")->capture_default_str();
  contour->add_option("--range1", range1, "lo:hi")->capture_default_str();
  contour->add_option("--family2", fam2, "ep or gamma")->capture_default_str();
  contour->add_option("--range2", range2, "lo:hi")->capture_default_str();
  contour->add_option("--steps", steps, "grid points per axis")->capture_default_str();
  contour->add_option("--output", output_c, "CSV output (default: standard output)");

  std::string scenario, output_s;
  unsigned threads = 1;
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo scenario file");
  sim->add_option("--scenario", scenario, "scenario file")->required();
  sim->add_option("--output", output_s, "CSV output (default: standard output)");
  sim->add_option("--threads", threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (unmix->parsed()) return detail::cmd_unmix(ua, out, err);
    if (asv->parsed()) return detail::cmd_asv(pair, dim, others, out);
    if (tab->parsed()) {
      write_table1(out);
      return kExitOk;
    }
    if (contour->parsed()) {
      const Method m = parse_method(method_c);
      const auto [lo1, hi1] = detail::parse_range(range1);
      const auto [lo2, hi2] = detail::parse_range(range2);
      const auto cells = asv_grid(m, {detail::parse_grid_family(fam1), lo1, hi1, steps},
                                  {detail::parse_grid_family(fam2), lo2, hi2, steps});
      if (output_c.empty()) {
        detail::write_grid(out, cells);
      } else {
        auto f = detail::open_output(output_c);
        detail::write_grid(f, cells);
      }
      return kExitOk;
    }
    if (sim->parsed()) {
      std::ifstream in(scenario);
      if (!in) throw Error(ErrorKind::InvalidInput, "cannot open scenario '" + scenario + "'");
      const ScenarioConfig cfg = parse_scenario(in);
      const ScenarioSummary summary = run_scenario(cfg, threads);
      if (output_s.empty()) {
        write_summary_csv(out, summary);
      } else {
        auto f = detail::open_output(output_s);
        write_summary_csv(f, summary);
      }
      for (const auto& ms : summary.methods)
        if (ms.n_not_converged + ms.n_ambiguous > 0)
          err << method_name(ms.method) << ": " << ms.n_not_converged << " not converged, " << ms.n_ambiguous
              << " ambiguous alignments\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::BothGaussian ? kExitUndefined : kExitInput;
  }
  return kExitInput;
}

}  // namespace fmica::cli
