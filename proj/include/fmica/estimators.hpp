// SPDX-License-Identifier: Apache-2.0
//
// Fourth-moment unmixing estimators: FOBI, JADE (Jacobi rotations and the
// fixed-point iteration), deflation-based FastICA and symmetric FastICA.
//
// Every estimator whitens the data, searches for an orthogonal rotation U of
// the whitened sample and returns W = U Sigma^{-1/2} with rows in canonical
// order and sign. The rotation searches are templates over a fourth-moment
// model so the same engines run on a sample or on exact population moments.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fmica/error.hpp"
#include "fmica/moments.hpp"
#include "fmica/numerics.hpp"
#include "fmica/rng.hpp"

namespace fmica {

enum class Method { Fobi, JadeJacobi, JadeFixedPoint, FasticaDeflation, FasticaSymmetric };

inline constexpr Method kAllMethods[] = {Method::FasticaDeflation, Method::FasticaSymmetric, Method::Fobi,
                                         Method::JadeJacobi, Method::JadeFixedPoint};

/// CLI / scenario name.
inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Fobi: return "fobi";
    case Method::JadeJacobi: return "jade";
    case Method::JadeFixedPoint: return "jade-fp";
    case Method::FasticaDeflation: return "dfica";
    case Method::FasticaSymmetric: return "sfica";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "fobi") return Method::Fobi;
  if (name == "jade" || name == "jade-jacobi") return Method::JadeJacobi;
  if (name == "jade-fp" || name == "jade-fixedpoint") return Method::JadeFixedPoint;
  if (name == "dfica" || name == "deflation") return Method::FasticaDeflation;
  if (name == "sfica" || name == "symmetric") return Method::FasticaSymmetric;
  throw Error(ErrorKind::InvalidInput, "unknown method '" + std::string(name) + "'");
}

enum class WarningKind { EigGap, NearZeroKurtosis, ZeroKurtosisSign, MaxIterExceeded, Restarted };

struct Warning {
  WarningKind kind;
  std::string message;
};

inline std::string_view to_string(WarningKind k) {
  switch (k) {
    case WarningKind::EigGap: return "EigGapWarning";
    case WarningKind::NearZeroKurtosis: return "NearZeroKurtosis";
    case WarningKind::ZeroKurtosisSign: return "ZeroKurtosisSign";
    case WarningKind::MaxIterExceeded: return "MaxIterExceeded";
    case WarningKind::Restarted: return "Restarted";
  }
  return "?";
}

/// Starting rotation for the iterative searches.
enum class InitPolicy {
  Fobi,      // rotation from the FOBI eigenvectors (affine equivariant)
  Identity,  // U0 = I on the whitened data
};

struct FastIcaConfig {
  int max_iter = 2000;
  double tol = 1e-9;
  int restarts = 5;
  std::uint64_t seed = 0;
  InitPolicy init = InitPolicy::Fobi;

  void validate() const {
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tol must be positive");
    if (max_iter < 1) throw Error(ErrorKind::InvalidInput, "max_iter must be at least 1");
    if (restarts < 0) throw Error(ErrorKind::InvalidInput, "restarts must be non-negative");
  }
};

struct JacobiConfig {
  int max_sweeps = 100;
  double tol = 1e-12;  // on the largest rotation angle of a sweep (radians)
  InitPolicy init = InitPolicy::Fobi;

  void validate() const {
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tol must be positive");
    if (max_sweeps < 1) throw Error(ErrorKind::InvalidInput, "max_sweeps must be at least 1");
  }
};

struct UnmixingEstimate {
  Matrix W;
  Matrix rotation;  // canonicalized U with W = U * whitener
  Method method = Method::Fobi;
  std::vector<int> iterations;  // per row (deflation) or a single entry
  bool converged = true;
  double objective = 0.0;
  double residual = 0.0;  // estimating-equation residual
  int restarts_used = 0;
  Vector component_kurtoses;
  std::vector<Warning> warnings;

  bool has_warning(WarningKind k) const {
    return std::any_of(warnings.begin(), warnings.end(), [k](const Warning& w) { return w.kind == k; });
  }
};

// ---------------------------------------------------------------------------
// Canonical row order and sign

struct Canonical {
  Matrix matrix;
  Vector kurtoses;
  std::vector<std::size_t> order;  // output row r came from input row order[r]
  Vector signs;                    // applied after permutation
};

inline std::size_t dominant_column(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (std::abs(row[j]) > std::abs(row[best])) best = j;
  return best;
}

/// Rows sorted by descending |kurtosis| (ties by dominant column index),
/// each row signed so its largest-magnitude entry is positive.
inline Canonical canonicalize(const Matrix& m, std::span<const double> kurtoses) {
  const std::size_t p = m.rows();
  if (kurtoses.size() != p) throw Error(ErrorKind::InvalidInput, "canonicalize: kurtosis count");
  Canonical c{Matrix(p, m.cols()), Vector(p), std::vector<std::size_t>(p), Vector(p)};
  std::iota(c.order.begin(), c.order.end(), 0);
  std::stable_sort(c.order.begin(), c.order.end(), [&](std::size_t a, std::size_t b) {
    const double ka = std::abs(kurtoses[a]), kb = std::abs(kurtoses[b]);
    if (std::abs(ka - kb) > 1e-12 * std::max(1.0, std::max(ka, kb))) return ka > kb;
    return dominant_column(m.row(a)) < dominant_column(m.row(b));
  });
  for (std::size_t r = 0; r < p; ++r) {
    const auto src = m.row(c.order[r]);
    const double s = src[dominant_column(src)] < 0.0 ? -1.0 : 1.0;
    c.signs[r] = s;
    c.kurtoses[r] = kurtoses[c.order[r]];
    for (std::size_t j = 0; j < m.cols(); ++j) c.matrix(r, j) = s * src[j];
  }
  return c;
}

inline Matrix apply_canonical(const Matrix& m, const Canonical& c) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t j = 0; j < m.cols(); ++j) out(r, j) = c.signs[r] * m(c.order[r], j);
  return out;
}

// ---------------------------------------------------------------------------
// Fourth-moment models

template <class M>
concept FourthMomentModel = requires(const M& m, std::span<const double> u) {
  { m.p() } -> std::convertible_to<std::size_t>;
  { m.T(u) } -> std::same_as<Vector>;
  { m.fourth(u) } -> std::convertible_to<double>;
};

/// Empirical moments of a whitened sample: T(u) = mean((u'x)^3 x).
class SampleModel {
 public:
  explicit SampleModel(const DataMatrix& standardized) : x_(&standardized) {}

  std::size_t p() const { return x_->p(); }

  Vector T(std::span<const double> u) const {
    const std::size_t p = x_->p(), n = x_->n();
    Vector t(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double y = 0.0;
      for (std::size_t k = 0; k < p; ++k) y += u[k] * (*x_)(k, i);
      const double y3 = y * y * y;
      for (std::size_t k = 0; k < p; ++k) t[k] += y3 * (*x_)(k, i);
    }
    for (double& v : t) v /= static_cast<double>(n);
    return t;
  }

  double fourth(std::span<const double> u) const {
    const std::size_t p = x_->p(), n = x_->n();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double y = 0.0;
      for (std::size_t k = 0; k < p; ++k) y += u[k] * (*x_)(k, i);
      acc += y * y * y * y;
    }
    return acc / static_cast<double>(n);
  }

 private:
  const DataMatrix* x_;
};

/// Exact moments of x_st = R' z with independent standardized z.
class PopulationModel {
 public:
  PopulationModel(Matrix rotation, Vector kappa) : r_(std::move(rotation)), kappa_(std::move(kappa)) {
    if (!r_.square() || r_.rows() != kappa_.size())
      throw Error(ErrorKind::InvalidInput, "PopulationModel: shape mismatch");
  }

  std::size_t p() const { return r_.rows(); }

  // E (v'z)^3 z = 3 |v|^2 v + kappa o v^3 with v = R u.
  Vector T(std::span<const double> u) const {
    const Vector v = r_ * u;
    const double vv = dot(v, v);
    Vector tz(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) tz[k] = 3.0 * vv * v[k] + kappa_[k] * v[k] * v[k] * v[k];
    return r_.transpose() * tz;
  }

  // E (v'z)^4 = 3 |v|^4 + sum kappa_k v_k^4.
  double fourth(std::span<const double> u) const {
    const Vector v = r_ * u;
    const double vv = dot(v, v);
    double acc = 3.0 * vv * vv;
    for (std::size_t k = 0; k < v.size(); ++k) acc += kappa_[k] * v[k] * v[k] * v[k] * v[k];
    return acc;
  }

  const Matrix& rotation() const { return r_; }

 private:
  Matrix r_;
  Vector kappa_;
};

// ---------------------------------------------------------------------------
// Rotation searches

struct RotationResult {
  Matrix U;
  std::vector<int> iterations;
  bool converged = false;
  int restarts_used = 0;
  double residual = 0.0;
};

namespace detail {

/// Flips rows of u_new so diag(u_new u_old') >= 0 and returns the
/// off-diagonal norm of u_new u_old' afterwards.
inline double align_rows_and_measure(Matrix& u_new, const Matrix& u_old) {
  Matrix m = u_new * u_old.transpose();
  for (std::size_t k = 0; k < m.rows(); ++k)
    if (m(k, k) < 0.0) {
      for (double& v : u_new.row(k)) v = -v;
      for (double& v : m.row(k)) v = -v;
    }
  return off_norm(m);
}

inline Vector random_unit_vector(std::size_t p, Rng& rng) {
  Vector v(p);
  for (double& x : v) x = rng.normal();
  const double len = norm(v);
  for (double& x : v) x /= len;
  return v;
}

/// v minus its projection on the given orthonormal rows.
inline Vector project_out(std::span<const double> v, const std::vector<Vector>& rows) {
  Vector r(v.begin(), v.end());
  for (const Vector& u : rows) {
    const double d = dot(u, r);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= d * u[k];
  }
  return r;
}

struct OneUnitResult {
  Vector u;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

template <FourthMomentModel M>
OneUnitResult one_unit(const M& model, Vector u, const std::vector<Vector>& found, const FastIcaConfig& cfg) {
  OneUnitResult res;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    // Step 1 with the -3u shift (same fixed points on the orthogonal
    // complement), then Step 2.
    Vector t = model.T(u);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] -= 3.0 * u[k];
    t = project_out(t, found);
    const double len = norm(t);
    if (!(len > 1e-300) || !std::isfinite(len)) {
      res.degenerate = true;
      res.u = std::move(u);
      res.iterations = it;
      return res;
    }
    for (double& v : t) v /= len;
    const double change = 1.0 - std::abs(dot(t, u));
    u = std::move(t);
    res.iterations = it;
    if (change < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.u = std::move(u);
  return res;
}

}  // namespace detail

/// Sequential extraction. Row k is searched from every start-basis row
/// projected onto the orthogonal complement of rows already found; the
/// converged candidate with the largest |E(u'x)^4 - 3| is kept. The last row
/// is the one-dimensional complement.
template <FourthMomentModel M>
RotationResult fastica_deflation_rotation(const M& model, const FastIcaConfig& cfg, const Matrix& start_basis,
                                          std::vector<Warning>& warnings) {
  cfg.validate();
  const std::size_t p = model.p();
  Rng rng = Rng::stream(cfg.seed, 0xDEF1A7E);
  std::vector<Vector> found;
  RotationResult res{Matrix(p, p), std::vector<int>(p, 0), true, 0, 0.0};

  for (std::size_t k = 0; k < p; ++k) {
    std::optional<detail::OneUnitResult> best;
    double best_kurt = -1.0;
    auto consider = [&](detail::OneUnitResult cand) {
      const double kurt = std::abs(model.fourth(cand.u) - 3.0);
      const bool better_status = best && cand.converged && !best->converged;
      const bool same_status = !best || cand.converged == best->converged;
      if (!best || better_status || (same_status && kurt > best_kurt)) {
        best_kurt = kurt;
        best = std::move(cand);
      }
    };

    if (k + 1 == p) {
      Vector v;
      double longest = -1.0;
      for (std::size_t b = 0; b < p; ++b) {
        Vector c = detail::project_out(start_basis.row(b), found);
        const double len = norm(c);
        if (len > longest) {
          longest = len;
          v = std::move(c);
        }
      }
      v = detail::project_out(v, found);  // second pass for orthogonality
      const double len = norm(v);
      for (double& x : v) x /= len;
      detail::OneUnitResult last;
      last.u = std::move(v);
      last.converged = true;
      consider(std::move(last));
    } else {
      for (std::size_t b = 0; b < p; ++b) {
        Vector v = detail::project_out(start_basis.row(b), found);
        const double len = norm(v);
        if (len < 1e-6) continue;
        for (double& x : v) x /= len;
        auto cand = detail::one_unit(model, std::move(v), found, cfg);
        if (!cand.degenerate) consider(std::move(cand));
      }
      for (int r = 0; r < cfg.restarts && (!best || !best->converged); ++r) {
        ++res.restarts_used;
        warnings.push_back({WarningKind::Restarted, "deflation row " + std::to_string(k + 1) + " restarted"});
        Vector v = detail::project_out(detail::random_unit_vector(p, rng), found);
        const double len = norm(v);
        for (double& x : v) x /= len;
        auto cand = detail::one_unit(model, std::move(v), found, cfg);
        if (!cand.degenerate) consider(std::move(cand));
      }
      if (!best) throw Error(ErrorKind::DegenerateUpdate, "deflation: every start degenerated");
      if (!best->converged) {
        res.converged = false;
        warnings.push_back({WarningKind::MaxIterExceeded, "deflation row " + std::to_string(k + 1) +
                                                               " did not converge"});
      }
      if (best_kurt < 0.05)
        warnings.push_back({WarningKind::NearZeroKurtosis,
                            "component " + std::to_string(k + 1) + " has |kurtosis| " + std::to_string(best_kurt)});
    }
    res.iterations[k] = best->iterations;
    found.push_back(best->u);
    for (std::size_t j = 0; j < p; ++j) res.U(k, j) = best->u[j];
  }

  // max_k | (u_k'T(u_k)) u_k - (I - sum_{j<k} u_j u_j') T(u_k) |
  std::vector<Vector> prior;
  for (std::size_t k = 0; k < p; ++k) {
    const Vector uk(res.U.row(k).begin(), res.U.row(k).end());
    const Vector t = model.T(uk);
    const double c = dot(uk, t);
    const Vector rhs = detail::project_out(t, prior);
    if (k + 1 < p)
      for (std::size_t j = 0; j < p; ++j) res.residual = std::max(res.residual, std::abs(c * uk[j] - rhs[j]));
    prior.push_back(uk);
  }
  return res;
}

/// Simultaneous extraction U <- Pi T (T'T)^{-1/2} with Pi the signs of the
/// current rows' excess kurtoses.
template <FourthMomentModel M>
RotationResult fastica_symmetric_rotation(const M& model, const FastIcaConfig& cfg, const Matrix& start,
                                          std::vector<Warning>& warnings) {
  cfg.validate();
  const std::size_t p = model.p();
  Rng rng = Rng::stream(cfg.seed, 0x5E77);
  RotationResult res{start, {0}, false, 0, 0.0};
  bool sign_warned = false;

  auto sign_of_rows = [&](const Matrix& u) {
    Vector pi(p);
    for (std::size_t k = 0; k < p; ++k) {
      const double kurt = model.fourth(u.row(k)) - 3.0;
      if (std::abs(kurt) < 1e-4) {
        pi[k] = 1.0;
        if (!sign_warned) {
          warnings.push_back({WarningKind::ZeroKurtosisSign, "kurtosis sign of a component is unstable; using +1"});
          sign_warned = true;
        }
      } else {
        pi[k] = kurt > 0.0 ? 1.0 : -1.0;
      }
    }
    return pi;
  };

  Matrix best = start;
  for (int attempt = 0; attempt <= cfg.restarts; ++attempt) {
    Matrix u = attempt == 0 ? start : haar_orthogonal(p, rng);
    if (attempt > 0) {
      ++res.restarts_used;
      warnings.push_back({WarningKind::Restarted, "symmetric FastICA restarted from a random rotation"});
    }
    bool degenerate = false;
    int it = 0;
    for (it = 1; it <= cfg.max_iter; ++it) {
      const Vector pi = sign_of_rows(u);
      Matrix t(p, p);
      for (std::size_t k = 0; k < p; ++k) {
        const Vector tk = model.T(u.row(k));
        for (std::size_t j = 0; j < p; ++j) t(k, j) = pi[k] * (tk[j] - 3.0 * u(k, j));
      }
      Matrix u_new;
      try {
        u_new = orthogonalize(t);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateUpdate) throw;
        degenerate = true;
        break;
      }
      const double delta = detail::align_rows_and_measure(u_new, u);
      u = std::move(u_new);
      if (delta < cfg.tol) {
        res.converged = true;
        break;
      }
    }
    res.iterations[0] += std::min(it, cfg.max_iter);
    best = u;
    if (res.converged) break;
    if (!degenerate && attempt == cfg.restarts) break;
  }
  if (!res.converged)
    warnings.push_back({WarningKind::MaxIterExceeded, "symmetric FastICA did not converge"});
  res.U = best;

  // max_ij | (U T' Pi - Pi T U')_ij |
  const Vector pi = sign_of_rows(res.U);
  Matrix t(p, p);
  for (std::size_t k = 0; k < p; ++k) {
    const Vector tk = model.T(res.U.row(k));
    for (std::size_t j = 0; j < p; ++j) t(k, j) = tk[j];
  }
  const Matrix a = res.U * t.transpose();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      res.residual = std::max(res.residual, std::abs(a(i, j) * pi[j] - pi[i] * a(j, i)));
  return res;
}

/// sum_k |E(u_k'x)^4 - 3|.
template <FourthMomentModel M>
double symmetric_fastica_objective(const M& model, const Matrix& u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < u.rows(); ++k) acc += std::abs(model.fourth(u.row(k)) - 3.0);
  return acc;
}

/// sum_ij |diag(U C^ij U')|^2.
inline double jade_objective(const CumulantMatrixSet& c, const Matrix& u) {
  double acc = 0.0;
  for (const Matrix& m : c.all()) {
    const Matrix r = u * m * u.transpose();
    for (std::size_t k = 0; k < r.rows(); ++k) acc += r(k, k) * r(k, k);
  }
  return acc;
}

/// sum_ij |off(U C^ij U')|^2.
inline double jade_off_objective(const CumulantMatrixSet& c, const Matrix& u) {
  double acc = 0.0;
  for (const Matrix& m : c.all()) {
    const double off = off_norm(u * m * u.transpose());
    acc += off * off;
  }
  return acc;
}

/// T(u) = sum_ij (u'C^ij u) C^ij u.
inline Vector jade_T(const CumulantMatrixSet& c, std::span<const double> u) {
  Vector t(c.p(), 0.0);
  for (const Matrix& m : c.all()) {
    const Vector mu = m * u;
    const double q = dot(u, mu);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] += q * mu[k];
  }
  return t;
}

inline Matrix jade_T(const CumulantMatrixSet& c, const Matrix& u) {
  Matrix t(u.rows(), u.cols());
  for (std::size_t k = 0; k < u.rows(); ++k) {
    const Vector tk = jade_T(c, u.row(k));
    for (std::size_t j = 0; j < u.cols(); ++j) t(k, j) = tk[j];
  }
  return t;
}

/// Per-rotation record for diagnostics: objective and conserved total.
struct JacobiStep {
  double diagonal;
  double off_diagonal;
};

/// Cyclic Jacobi joint diagonalization of the cumulant matrices. Each
/// rotation angle is the closed-form maximizer of the pairwise
/// sum-of-squared-diagonals over 2x2 Givens rotations.
inline RotationResult jade_jacobi_rotation(const CumulantMatrixSet& cumulants, const JacobiConfig& cfg,
                                           const Matrix& start, std::vector<JacobiStep>* trace = nullptr) {
  cfg.validate();
  const std::size_t p = cumulants.p();
  std::vector<Matrix> mats;
  mats.reserve(cumulants.all().size());
  for (const Matrix& m : cumulants.all()) mats.push_back(start * m * start.transpose());
  Matrix u = start;
  RotationResult res{Matrix(), {0}, false, 0, 0.0};

  auto record = [&] {
    if (!trace) return;
    double d = 0.0, o = 0.0;
    for (const Matrix& m : mats)
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) (i == j ? d : o) += m(i, j) * m(i, j);
    trace->push_back({d, o});
  };
  record();

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double largest = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = a + 1; b < p; ++b) {
        double g11 = 0.0, g12 = 0.0, g22 = 0.0;
        for (const Matrix& m : mats) {
          const double h1 = m(a, a) - m(b, b);
          const double h2 = m(a, b) + m(b, a);
          g11 += h1 * h1;
          g12 += h1 * h2;
          g22 += h2 * h2;
        }
        // (cos 2t, sin 2t) is the principal eigenvector of G.
        const double theta = 0.25 * std::atan2(2.0 * g12, g11 - g22);
        largest = std::max(largest, std::abs(theta));
        if (theta == 0.0) continue;
        const double c = std::cos(theta), s = std::sin(theta);
        for (Matrix& m : mats) {
          for (std::size_t k = 0; k < p; ++k) {
            const double x = m(a, k), y = m(b, k);
            m(a, k) = c * x + s * y;
            m(b, k) = -s * x + c * y;
          }
          for (std::size_t k = 0; k < p; ++k) {
            const double x = m(k, a), y = m(k, b);
            m(k, a) = c * x + s * y;
            m(k, b) = -s * x + c * y;
          }
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double x = u(a, k), y = u(b, k);
          u(a, k) = c * x + s * y;
          u(b, k) = -s * x + c * y;
        }
        record();
      }
    }
    res.iterations[0] = sweep;
    if (largest < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.U = std::move(u);
  const Matrix t = jade_T(cumulants, res.U);
  const Matrix a = t * res.U.transpose();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) res.residual = std::max(res.residual, std::abs(a(i, j) - a(j, i)));
  return res;
}

/// Fixed-point iteration U <- T (T'T)^{-1/2} for the JADE estimating equations.
inline RotationResult jade_fixedpoint_rotation(const CumulantMatrixSet& cumulants, const FastIcaConfig& cfg,
                                               const Matrix& start, std::vector<Warning>& warnings) {
  cfg.validate();
  const std::size_t p = cumulants.p();
  Rng rng = Rng::stream(cfg.seed, 0x7ADE);
  RotationResult res{start, {0}, false, 0, 0.0};
  Matrix u = start;
  for (int attempt = 0; attempt <= cfg.restarts; ++attempt) {
    if (attempt > 0) {
      ++res.restarts_used;
      warnings.push_back({WarningKind::Restarted, "JADE fixed point restarted from a random rotation"});
      u = haar_orthogonal(p, rng);
    }
    bool degenerate = false;
    int it = 0;
    for (it = 1; it <= cfg.max_iter; ++it) {
      Matrix u_new;
      try {
        u_new = orthogonalize(jade_T(cumulants, u));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateUpdate) throw;
        degenerate = true;
        break;
      }
      const double delta = detail::align_rows_and_measure(u_new, u);
      u = std::move(u_new);
      if (delta < cfg.tol) {
        res.converged = true;
        break;
      }
    }
    res.iterations[0] += std::min(it, cfg.max_iter);
    if (res.converged || !degenerate) break;
  }
  if (!res.converged) warnings.push_back({WarningKind::MaxIterExceeded, "JADE fixed point did not converge"});
  res.U = std::move(u);
  const Matrix t = jade_T(cumulants, res.U);
  const Matrix a = t * res.U.transpose();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) res.residual = std::max(res.residual, std::abs(a(i, j) - a(j, i)));
  return res;
}

// ---------------------------------------------------------------------------
// Estimators on data

struct FobiRotation {
  Matrix U;  // rows: eigenvectors of B, descending eigenvalue
  Vector eigenvalues;
  bool eigen_gap_warning = false;
};

inline FobiRotation fobi_rotation(const WhitenedSample& w) {
  const SymEigen e = sym_eigen(kurtosis_matrix_B(w));
  FobiRotation r{e.eigenvectors.transpose(), e.eigenvalues, false};
  double scale = 0.0;
  for (double l : e.eigenvalues) scale = std::max(scale, std::abs(l));
  for (std::size_t k = 0; k + 1 < e.eigenvalues.size(); ++k)
    if (e.eigenvalues[k] - e.eigenvalues[k + 1] < 1e-3 * scale) r.eigen_gap_warning = true;
  return r;
}

inline Matrix initial_rotation(const WhitenedSample& w, InitPolicy policy) {
  return policy == InitPolicy::Identity ? Matrix::identity(w.p()) : fobi_rotation(w).U;
}

namespace detail {

inline UnmixingEstimate finish(const WhitenedSample& w, Method method, RotationResult&& rot,
                               std::vector<Warning>&& warnings) {
  const SampleModel model(w.data);
  const std::size_t p = w.p();
  Vector kurt(p);
  for (std::size_t k = 0; k < p; ++k) kurt[k] = model.fourth(rot.U.row(k)) - 3.0;
  const Matrix raw_w = rot.U * w.whitener;
  const Canonical c = canonicalize(raw_w, kurt);

  UnmixingEstimate est;
  est.W = c.matrix;
  est.rotation = apply_canonical(rot.U, c);
  est.method = method;
  est.iterations = std::move(rot.iterations);
  est.converged = rot.converged;
  est.residual = rot.residual;
  est.restarts_used = rot.restarts_used;
  est.component_kurtoses = c.kurtoses;
  est.warnings = std::move(warnings);
  return est;
}

}  // namespace detail

inline UnmixingEstimate fobi(const WhitenedSample& w) {
  FobiRotation f = fobi_rotation(w);
  std::vector<Warning> warnings;
  if (f.eigen_gap_warning)
    warnings.push_back({WarningKind::EigGap, "eigenvalues of the kurtosis matrix are nearly equal; "
                                             "components with equal kurtosis are not separable by FOBI"});
  RotationResult rot{f.U, {0}, true, 0, 0.0};
  // Residual: largest off-diagonal of U B U'.
  rot.residual = max_abs(symmetrize(f.U * kurtosis_matrix_B(w) * f.U.transpose()) -
                         Matrix::diagonal(f.eigenvalues));
  auto est = detail::finish(w, Method::Fobi, std::move(rot), std::move(warnings));
  est.objective = 0.0;
  for (std::size_t k = 0; k < f.eigenvalues.size(); ++k) est.objective += f.eigenvalues[k];
  return est;
}

inline UnmixingEstimate jade_jacobi(const WhitenedSample& w, const JacobiConfig& cfg = {}) {
  const CumulantMatrixSet c = cumulant_matrices(w);
  RotationResult rot = jade_jacobi_rotation(c, cfg, initial_rotation(w, cfg.init));
  std::vector<Warning> warnings;
  if (!rot.converged) warnings.push_back({WarningKind::MaxIterExceeded, "Jacobi sweeps did not converge"});
  const double objective = jade_objective(c, rot.U);
  auto est = detail::finish(w, Method::JadeJacobi, std::move(rot), std::move(warnings));
  est.objective = objective;
  return est;
}

inline UnmixingEstimate jade_fixedpoint(const WhitenedSample& w, const FastIcaConfig& cfg = {}) {
  const CumulantMatrixSet c = cumulant_matrices(w);
  std::vector<Warning> warnings;
  RotationResult rot = jade_fixedpoint_rotation(c, cfg, initial_rotation(w, cfg.init), warnings);
  const double objective = jade_objective(c, rot.U);
  auto est = detail::finish(w, Method::JadeFixedPoint, std::move(rot), std::move(warnings));
  est.objective = objective;
  return est;
}

inline UnmixingEstimate fastica_deflation(const WhitenedSample& w, const FastIcaConfig& cfg = {}) {
  std::vector<Warning> warnings;
  const SampleModel model(w.data);
  RotationResult rot = fastica_deflation_rotation(model, cfg, initial_rotation(w, cfg.init), warnings);
  const double objective = symmetric_fastica_objective(model, rot.U);
  auto est = detail::finish(w, Method::FasticaDeflation, std::move(rot), std::move(warnings));
  est.objective = objective;
  return est;
}

inline UnmixingEstimate fastica_symmetric(const WhitenedSample& w, const FastIcaConfig& cfg = {}) {
  std::vector<Warning> warnings;
  const SampleModel model(w.data);
  RotationResult rot = fastica_symmetric_rotation(model, cfg, initial_rotation(w, cfg.init), warnings);
  const double objective = symmetric_fastica_objective(model, rot.U);
  auto est = detail::finish(w, Method::FasticaSymmetric, std::move(rot), std::move(warnings));
  est.objective = objective;
  return est;
}

inline UnmixingEstimate fobi(const DataMatrix& x) { return fobi(whiten(x)); }
inline UnmixingEstimate jade_jacobi(const DataMatrix& x, const JacobiConfig& cfg = {}) {
  return jade_jacobi(whiten(x), cfg);
}
inline UnmixingEstimate jade_fixedpoint(const DataMatrix& x, const FastIcaConfig& cfg = {}) {
  return jade_fixedpoint(whiten(x), cfg);
}
inline UnmixingEstimate fastica_deflation(const DataMatrix& x, const FastIcaConfig& cfg = {}) {
  return fastica_deflation(whiten(x), cfg);
}
inline UnmixingEstimate fastica_symmetric(const DataMatrix& x, const FastIcaConfig& cfg = {}) {
  return fastica_symmetric(whiten(x), cfg);
}

struct EstimatorOptions {
  FastIcaConfig fastica;
  JacobiConfig jacobi;
};

inline UnmixingEstimate estimate(Method m, const WhitenedSample& w, const EstimatorOptions& opt = {}) {
  switch (m) {
    case Method::Fobi: return fobi(w);
    case Method::JadeJacobi: return jade_jacobi(w, opt.jacobi);
    case Method::JadeFixedPoint: return jade_fixedpoint(w, opt.fastica);
    case Method::FasticaDeflation: return fastica_deflation(w, opt.fastica);
    case Method::FasticaSymmetric: return fastica_symmetric(w, opt.fastica);
  }
  throw Error(ErrorKind::InvalidInput, "unknown method");
}

inline UnmixingEstimate estimate(Method m, const DataMatrix& x, const EstimatorOptions& opt = {}) {
  return estimate(m, whiten(x), opt);
}

}  // namespace fmica
