// SPDX-License-Identifier: Apache-2.0
//
// Small dense linear algebra for ICA-sized problems (p up to a few tens):
// a row-major matrix, cyclic Jacobi eigendecomposition of symmetric matrices,
// the symmetric inverse square root and polar orthogonalization.
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "fmica/error.hpp"

namespace fmica {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw Error(ErrorKind::InvalidInput, "ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t p) {
    Matrix m(p, p);
    for (std::size_t i = 0; i < p; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  /// E^ij = e_i e_j'.
  static Matrix unit(std::size_t p, std::size_t i, std::size_t j) {
    Matrix m(p, p);
    m(i, j) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw Error(ErrorKind::InvalidInput, "matrix product shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw Error(ErrorKind::InvalidInput, "matrix-vector shape mismatch");
    Vector y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) y[i] += a(i, j) * x[j];
    return y;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw Error(ErrorKind::InvalidInput, "matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const Matrix& m) { return norm(m.data()); }

inline double max_abs(const Matrix& m) {
  double r = 0.0;
  for (double v : m.data()) r = std::max(r, std::abs(v));
  return r;
}

/// Frobenius norm of the off-diagonal part.
inline double off_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

inline Matrix symmetrize(const Matrix& s) {
  Matrix r = s;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j) r(i, j) = r(j, i) = 0.5 * (s(i, j) + s(j, i));
  return r;
}

struct SymEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns, orthogonal
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized first. Eigenvalues come back in descending order
/// and each eigenvector column is signed so that its largest-magnitude entry
/// is positive (first such entry on exact ties), so the output is a
/// deterministic function of the input.
inline SymEigen sym_eigen(const Matrix& input) {
  if (!input.square() || input.rows() == 0)
    throw Error(ErrorKind::InvalidInput, "sym_eigen needs a non-empty square matrix");
  if (!input.all_finite()) throw Error(ErrorKind::InvalidInput, "sym_eigen: non-finite entry");

  const std::size_t p = input.rows();
  Matrix a = symmetrize(input);
  Matrix v = Matrix::identity(p);
  const double scale = frobenius_norm(a);
  const double threshold = 1e-12 * scale;

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && scale > 0.0; ++sweep) {
    double largest = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) largest = std::max(largest, std::abs(a(i, j)));
    if (largest < threshold) break;

    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        const double aij = a(i, j);
        if (aij == 0.0) continue;
        // Rotation zeroing a(i, j), smaller of the two admissible angles.
        const double theta = (a(j, j) - a(i, i)) / (2.0 * aij);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < p; ++k) {
          const double aki = a(k, i), akj = a(k, j);
          a(k, i) = c * aki - s * akj;
          a(k, j) = s * aki + c * akj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = a(i, k), ajk = a(j, k);
          a(i, k) = c * aik - s * ajk;
          a(j, k) = s * aik + c * ajk;
        }
        a(i, j) = a(j, i) = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          const double vki = v(k, i), vkj = v(k, j);
          v(k, i) = c * vki - s * vkj;
          v(k, j) = s * vki + c * vkj;
        }
      }
    }
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymEigen out{Vector(p), Matrix(p, p)};
  for (std::size_t c = 0; c < p; ++c) {
    const std::size_t src = order[c];
    out.eigenvalues[c] = a(src, src);
    std::size_t dominant = 0;
    for (std::size_t k = 1; k < p; ++k)
      if (std::abs(v(k, src)) > std::abs(v(dominant, src))) dominant = k;
    const double sign = v(dominant, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < p; ++k) out.eigenvectors(k, c) = sign * v(k, src);
  }
  return out;
}

/// V diag(f(lambda)) V'.
template <class F>
Matrix spectral_function(const SymEigen& e, F&& f) {
  const std::size_t p = e.eigenvalues.size();
  Matrix r(p, p);
  for (std::size_t c = 0; c < p; ++c) {
    const double fc = f(e.eigenvalues[c]);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) r(i, j) += e.eigenvectors(i, c) * fc * e.eigenvectors(j, c);
  }
  return r;
}

inline constexpr double kPositiveDefiniteTolerance = 1e-12;

/// Symmetric positive-definite inverse square root S^{-1/2}.
///
/// Throws SingularCovarianceError when an eigenvalue is at or below
/// 1e-12 times the largest eigenvalue.
inline Matrix inv_sqrt(const Matrix& s) {
  const SymEigen e = sym_eigen(s);
  const double top = e.eigenvalues.front();
  const double bottom = e.eigenvalues.back();
  const double threshold = kPositiveDefiniteTolerance * std::max(top, 0.0);
  if (!(top > 0.0) || bottom <= threshold) throw SingularCovarianceError(bottom, threshold);
  return symmetrize(spectral_function(e, [](double l) { return 1.0 / std::sqrt(l); }));
}

/// Symmetric positive-definite square root S^{1/2}.
inline Matrix sqrt_spd(const Matrix& s) {
  const SymEigen e = sym_eigen(s);
  const double threshold = kPositiveDefiniteTolerance * std::max(e.eigenvalues.front(), 0.0);
  if (!(e.eigenvalues.front() > 0.0) || e.eigenvalues.back() <= threshold)
    throw SingularCovarianceError(e.eigenvalues.back(), threshold);
  return symmetrize(spectral_function(e, [](double l) { return std::sqrt(l); }));
}

/// Closest orthogonal matrix in Frobenius norm, T (T'T)^{-1/2}.
///
/// Throws DegenerateUpdate when T is numerically rank deficient. Two Newton
/// (Bjorck) polishing steps bring Q Q' to identity at rounding level.
inline Matrix orthogonalize(const Matrix& t) {
  if (!t.square()) throw Error(ErrorKind::InvalidInput, "orthogonalize needs a square matrix");
  if (!t.all_finite()) throw Error(ErrorKind::DegenerateUpdate, "orthogonalize: non-finite entry");
  const SymEigen e = sym_eigen(t.transpose() * t);
  const double top = e.eigenvalues.front();
  if (!(top > 0.0) || e.eigenvalues.back() <= 1e-14 * top)
    throw Error(ErrorKind::DegenerateUpdate, "orthogonalize: rank-deficient update matrix");
  Matrix q = t * spectral_function(e, [](double l) { return 1.0 / std::sqrt(l); });
  for (int k = 0; k < 2; ++k) q = 1.5 * q - 0.5 * (q * q.transpose() * q);
  return q;
}

/// Inverse of a small square matrix by Gauss-Jordan with partial pivoting.
inline Matrix inverse(const Matrix& m) {
  if (!m.square()) throw Error(ErrorKind::InvalidInput, "inverse needs a square matrix");
  const std::size_t p = m.rows();
  Matrix a = m;
  Matrix inv = Matrix::identity(p);
  const double scale = std::max(max_abs(m), 1e-300);
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (std::abs(a(piv, c)) <= 1e-14 * scale) throw Error(ErrorKind::InvalidInput, "singular matrix");
    if (piv != c)
      for (std::size_t j = 0; j < p; ++j) {
        std::swap(a(c, j), a(piv, j));
        std::swap(inv(c, j), inv(piv, j));
      }
    const double d = a(c, c);
    for (std::size_t j = 0; j < p; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < p; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

}  // namespace fmica
