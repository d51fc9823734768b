// SPDX-License-Identifier: Apache-2.0
//
// Empirical moment machinery: centering, covariance, whitening, the
// fourth-moment matrices B(A), B^ij, the cumulant matrices C^ij, Cov4 and the
// diagnostic statistics s_kl, r_kl, r_mkl. All expectations are plain 1/n
// averages.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmica/error.hpp"
#include "fmica/numerics.hpp"

namespace fmica {

/// p x n sample, one observation per column.
class DataMatrix {
 public:
  DataMatrix() = default;

  /// Validates n > p, p >= 1 and finiteness.
  explicit DataMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() == 0) throw Error(ErrorKind::InvalidInput, "data matrix has no variables");
    if (values_.cols() <= values_.rows())
      throw Error(ErrorKind::InvalidInput, "need more observations than variables (n=" +
                                               std::to_string(values_.cols()) +
                                               ", p=" + std::to_string(values_.rows()) + ")");
    if (!values_.all_finite()) throw Error(ErrorKind::InvalidInput, "data matrix has non-finite entries");
  }

  std::size_t p() const noexcept { return values_.rows(); }
  std::size_t n() const noexcept { return values_.cols(); }
  double operator()(std::size_t k, std::size_t i) const { return values_(k, i); }
  std::span<const double> variable(std::size_t k) const { return values_.row(k); }
  const Matrix& values() const noexcept { return values_; }

  Vector observation(std::size_t i) const { return values_.column(i); }

 private:
  Matrix values_;
};

/// A x + b 1', applied column-wise.
inline DataMatrix affine_transform(const Matrix& a, std::span<const double> b, const DataMatrix& x) {
  if (a.cols() != x.p() || b.size() != a.rows())
    throw Error(ErrorKind::InvalidInput, "affine_transform shape mismatch");
  Matrix y = a * x.values();
  for (std::size_t k = 0; k < y.rows(); ++k)
    for (std::size_t i = 0; i < y.cols(); ++i) y(k, i) += b[k];
  return DataMatrix(std::move(y));
}

inline Vector sample_mean(const DataMatrix& x) {
  Vector mu(x.p(), 0.0);
  for (std::size_t k = 0; k < x.p(); ++k) {
    double s = 0.0;
    for (double v : x.variable(k)) s += v;
    mu[k] = s / static_cast<double>(x.n());
  }
  return mu;
}

/// Covariance with denominator n.
inline Matrix sample_covariance(const DataMatrix& x) {
  const Vector mu = sample_mean(x);
  const std::size_t p = x.p(), n = x.n();
  Matrix s(p, p);
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = k; l < p; ++l) {
      const auto xk = x.variable(k);
      const auto xl = x.variable(l);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += (xk[i] - mu[k]) * (xl[i] - mu[l]);
      s(k, l) = s(l, k) = acc / static_cast<double>(n);
    }
  return s;
}

struct WhitenedSample {
  DataMatrix data;  // Sigma^{-1/2} (x - mu)
  Vector mean;
  Matrix whitener;  // symmetric Sigma^{-1/2}

  std::size_t p() const noexcept { return data.p(); }
  std::size_t n() const noexcept { return data.n(); }
};

/// Standardizes x to zero mean and identity covariance with the symmetric
/// inverse square root of the sample covariance.
inline WhitenedSample whiten(const DataMatrix& x) {
  Vector mu = sample_mean(x);
  Matrix whitener = inv_sqrt(sample_covariance(x));
  const std::size_t p = x.p(), n = x.n();
  Matrix z(p, n);
  Vector centered(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) centered[k] = x(k, i) - mu[k];
    for (std::size_t k = 0; k < p; ++k) {
      double acc = 0.0;
      for (std::size_t l = 0; l < p; ++l) acc += whitener(k, l) * centered[l];
      z(k, i) = acc;
    }
  }
  return {DataMatrix(std::move(z)), std::move(mu), std::move(whitener)};
}

/// B(A) = (1/n) sum_i x_i x_i' A x_i x_i' on data taken as already standardized.
inline Matrix fourth_moment_matrix(const DataMatrix& x, const Matrix& a) {
  const std::size_t p = x.p(), n = x.n();
  if (a.rows() != p || a.cols() != p) throw Error(ErrorKind::InvalidInput, "B(A): shape mismatch");
  Matrix b(p, p);
  Vector xi(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) xi[k] = x(k, i);
    double q = 0.0;
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t l = 0; l < p; ++l) q += xi[k] * a(k, l) * xi[l];
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t l = k; l < p; ++l) b(k, l) += q * xi[k] * xi[l];
  }
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = k; l < p; ++l) b(l, k) = b(k, l) = b(k, l) / static_cast<double>(n);
  return b;
}

/// Kurtosis matrix B = (1/n) sum_i x_i x_i' x_i x_i' of data taken as standardized.
inline Matrix kurtosis_matrix_B(const DataMatrix& standardized) {
  const std::size_t p = standardized.p(), n = standardized.n();
  Matrix b(p, p);
  Vector xi(p);
  for (std::size_t i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      xi[k] = standardized(k, i);
      r2 += xi[k] * xi[k];
    }
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t l = k; l < p; ++l) b(k, l) += r2 * xi[k] * xi[l];
  }
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = k; l < p; ++l) b(l, k) = b(k, l) = b(k, l) / static_cast<double>(n);
  return b;
}

inline Matrix kurtosis_matrix_B(const WhitenedSample& w) { return kurtosis_matrix_B(w.data); }

/// Cov4(x) = E((x-mu)(x-mu)' Sigma^{-1} (x-mu)(x-mu)').
inline Matrix cov4(const DataMatrix& x) {
  const Vector mu = sample_mean(x);
  const Matrix sigma = sample_covariance(x);
  const Matrix w = inv_sqrt(sigma);
  const Matrix sigma_inv = w * w;
  const std::size_t p = x.p(), n = x.n();
  Matrix c(p, p);
  Vector d(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) d[k] = x(k, i) - mu[k];
    double q = 0.0;
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t l = 0; l < p; ++l) q += d[k] * sigma_inv(k, l) * d[l];
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t l = k; l < p; ++l) c(k, l) += q * d[k] * d[l];
  }
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = k; l < p; ++l) c(l, k) = c(k, l) = c(k, l) / static_cast<double>(n);
  return c;
}

/// The p^2 fourth-cumulant matrices C^ij, indexed (i, j).
class CumulantMatrixSet {
 public:
  CumulantMatrixSet() = default;
  explicit CumulantMatrixSet(std::size_t p) : p_(p), matrices_(p * p, Matrix(p, p)) {}

  std::size_t p() const noexcept { return p_; }
  Matrix& operator()(std::size_t i, std::size_t j) { return matrices_[i * p_ + j]; }
  const Matrix& operator()(std::size_t i, std::size_t j) const { return matrices_[i * p_ + j]; }
  std::span<const Matrix> all() const noexcept { return matrices_; }
  std::span<Matrix> all() noexcept { return matrices_; }

  /// sum_ij a_ij C^ij.
  Matrix combine(const Matrix& a) const {
    Matrix r(p_, p_);
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = 0; j < p_; ++j)
        if (a(i, j) != 0.0) r += a(i, j) * (*this)(i, j);
    return r;
  }

 private:
  std::size_t p_ = 0;
  std::vector<Matrix> matrices_;
};

/// C(A) = B(A) - A - A' - tr(A) I on data taken as standardized.
inline Matrix cumulant_matrix(const DataMatrix& x, const Matrix& a) {
  Matrix c = fourth_moment_matrix(x, a);
  c -= a;
  c -= a.transpose();
  const double tr = a.trace();
  for (std::size_t k = 0; k < x.p(); ++k) c(k, k) -= tr;
  return c;
}

/// C^ij = B^ij - E^ij - E^ji - delta_ij I. Each matrix is accumulated in a
/// fixed observation order.
inline CumulantMatrixSet cumulant_matrices(const DataMatrix& standardized) {
  const std::size_t p = standardized.p(), n = standardized.n();
  CumulantMatrixSet set(p);
  Vector xi(p);
  // B^ij = (1/n) sum x_i x_j x x'; symmetric in (i, j) so fill i <= j and copy.
  for (std::size_t obs = 0; obs < n; ++obs) {
    for (std::size_t k = 0; k < p; ++k) xi[k] = standardized(k, obs);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) {
        const double w = xi[i] * xi[j];
        Matrix& m = set(i, j);
        for (std::size_t k = 0; k < p; ++k)
          for (std::size_t l = k; l < p; ++l) m(k, l) += w * xi[k] * xi[l];
      }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      Matrix& m = set(i, j);
      for (std::size_t k = 0; k < p; ++k)
        for (std::size_t l = k; l < p; ++l) m(l, k) = m(k, l) = m(k, l) * inv_n;
      m(i, j) -= 1.0;
      m(j, i) -= 1.0;
      if (i == j)
        for (std::size_t k = 0; k < p; ++k) m(k, k) -= 1.0;
      if (i != j) set(j, i) = m;
    }
  return set;
}

inline CumulantMatrixSet cumulant_matrices(const WhitenedSample& w) { return cumulant_matrices(w.data); }

/// Population C^ij of x_st = R' z for independent standardized z with excess
/// kurtoses kappa: C(x, A) = sum_k kappa_k (r_k' A r_k) r_k r_k' with r_k the
/// k-th column of R'.
inline CumulantMatrixSet population_cumulants(const Matrix& rotation, std::span<const double> kappa) {
  const std::size_t p = rotation.rows();
  if (kappa.size() != p) throw Error(ErrorKind::InvalidInput, "population_cumulants: kappa size");
  CumulantMatrixSet set(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      Matrix& m = set(i, j);
      for (std::size_t s = 0; s < p; ++s) {
        // r_s = R' e_s = s-th row of R.
        const auto r = rotation.row(s);
        const double w = kappa[s] * r[i] * r[j];
        for (std::size_t k = 0; k < p; ++k)
          for (std::size_t l = 0; l < p; ++l) m(k, l) += w * r[k] * r[l];
      }
    }
  return set;
}

struct EmpiricalAsymStats {
  Matrix s_hat;  // (1/n) sum z_k z_l
  Matrix r_hat;  // (1/n) sum (z_k^3 - gamma_k) z_l
  Vector gamma_hat;
};

/// Raw (uncentered) statistics of data taken as standardized sources.
inline EmpiricalAsymStats asym_stats(const DataMatrix& z) {
  const std::size_t p = z.p(), n = z.n();
  const double inv_n = 1.0 / static_cast<double>(n);
  EmpiricalAsymStats st{Matrix(p, p), Matrix(p, p), Vector(p, 0.0)};
  for (std::size_t k = 0; k < p; ++k) {
    double g = 0.0;
    for (double v : z.variable(k)) g += v * v * v;
    st.gamma_hat[k] = g * inv_n;
  }
  for (std::size_t k = 0; k < p; ++k) {
    const auto zk = z.variable(k);
    for (std::size_t l = 0; l < p; ++l) {
      const auto zl = z.variable(l);
      double s = 0.0, r = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += zk[i] * zl[i];
        r += (zk[i] * zk[i] * zk[i] - st.gamma_hat[k]) * zl[i];
      }
      st.s_hat(k, l) = s * inv_n;
      st.r_hat(k, l) = r * inv_n;
    }
  }
  return st;
}

/// r_mkl = (1/n) sum z_m^2 z_k z_l.
inline double r_mkl(const DataMatrix& z, std::size_t m, std::size_t k, std::size_t l) {
  const auto zm = z.variable(m), zk = z.variable(k), zl = z.variable(l);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.n(); ++i) acc += zm[i] * zm[i] * zk[i] * zl[i];
  return acc / static_cast<double>(z.n());
}

/// Excess kurtosis mean((x - mean)^4) / var^2 - 3 of one row.
inline double excess_kurtosis(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - mu) * (v - mu);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace fmica
