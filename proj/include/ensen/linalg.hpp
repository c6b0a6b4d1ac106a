#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ensen/errors.hpp"

namespace ensen::linalg {

using Vector = std::vector<double>;

// Dense column-major matrix. Column-major because ensemble matrices are built
// and consumed one member (column) at a time.
class DenseMatrix {
public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0)
      throw DimensionMismatch("DenseMatrix: rows and cols must be >= 1");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix from_columns(const std::vector<Vector>& cols) {
    if (cols.empty()) throw DimensionMismatch("from_columns: no columns");
    DenseMatrix m(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].size() != m.rows_)
        throw DimensionMismatch("from_columns: ragged columns");
      std::copy(cols[j].begin(), cols[j].end(), m.col(j));
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  double* col(std::size_t j) { return data_.data() + j * rows_; }
  const double* col(std::size_t j) const { return data_.data() + j * rows_; }

  void set_col(std::size_t j, const Vector& v) {
    if (v.size() != rows_) throw DimensionMismatch("set_col: length mismatch");
    std::copy(v.begin(), v.end(), col(j));
  }

  Vector col_vector(std::size_t j) const {
    return Vector(col(j), col(j) + rows_);
  }

  void check_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) throw Error("DenseMatrix: non-finite entry");
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::fabs(x));
    return m;
  }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct RegularizationPolicy {
  double alpha_s = 1e-14; // dimensionless; 0 means unregularized
  bool enabled = true;
};

// Deterministic left-to-right dot product; all reductions in this module use
// a fixed order so serial and concurrent runs agree bitwise.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  return dot(a.data(), b.data(), a.size());
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a.data(), a.data(), a.size())); }

inline Vector matvec(const DenseMatrix& m, const Vector& x) {
  if (x.size() != m.cols()) throw DimensionMismatch("matvec: dimension mismatch");
  Vector y(m.rows(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double* c = m.col(j);
    const double xj = x[j];
    for (std::size_t i = 0; i < m.rows(); ++i) y[i] += c[i] * xj;
  }
  return y;
}

inline Vector matTvec(const DenseMatrix& m, const Vector& y) {
  if (y.size() != m.rows()) throw DimensionMismatch("matTvec: dimension mismatch");
  Vector x(m.cols(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) x[j] = dot(m.col(j), y.data(), m.rows());
  return x;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      const double* ak = a.col(k);
      double* cj = c.col(j);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
    }
  return c;
}

// A = M^T M, symmetric E x E.
inline DenseMatrix normal_matrix(const DenseMatrix& m) {
  DenseMatrix a(m.cols(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t k = 0; k <= j; ++k) {
      const double v = dot(m.col(k), m.col(j), m.rows());
      a(k, j) = v;
      a(j, k) = v;
    }
  return a;
}

// eps_s = (alpha_s / E) * trace(M^T M); invariant under column permutation.
inline double regularization_shift(const DenseMatrix& normal, const RegularizationPolicy& policy) {
  if (!policy.enabled || policy.alpha_s == 0.0) return 0.0;
  if (policy.alpha_s < 0.0) throw ConfigError("alpha_s must be >= 0");
  double trace = 0.0;
  for (std::size_t k = 0; k < normal.cols(); ++k) trace += normal(k, k);
  return policy.alpha_s / static_cast<double>(normal.cols()) * trace;
}

namespace detail {

// In-place LL^T factorization. Returns false when a pivot falls below the
// machine-scaled threshold instead of throwing, so callers can fall back.
inline bool cholesky(DenseMatrix& a, double pivot_floor) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > pivot_floor)) return false;
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / l;
    }
  }
  return true;
}

inline Vector cholesky_solve(const DenseMatrix& l, const Vector& b) {
  const std::size_t n = l.rows();
  Vector y(b);
  for (std::size_t i = 0; i < n; ++i) {
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * y[k];
    y[ii] = s / l(ii, ii);
  }
  return y;
}

// Partially pivoted Gaussian elimination fallback.
inline Vector gauss_solve(DenseMatrix a, Vector b, double pivot_floor) {
  const std::size_t n = a.rows();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t p = j;
    double best = std::fabs(a(perm[j], j));
    for (std::size_t i = j + 1; i < n; ++i) {
      const double v = std::fabs(a(perm[i], j));
      if (v > best) { best = v; p = i; }
    }
    if (best <= pivot_floor)
      throw SingularSystem("normal system numerically singular: ensemble members are no longer independent");
    std::swap(perm[j], perm[p]);
    const double piv = a(perm[j], j);
    for (std::size_t i = j + 1; i < n; ++i) {
      const double f = a(perm[i], j) / piv;
      if (f == 0.0) continue;
      for (std::size_t k = j + 1; k < n; ++k) a(perm[i], k) -= f * a(perm[j], k);
      b[perm[i]] -= f * b[perm[j]];
    }
  }
  Vector x(n, 0.0);
  for (std::size_t jj = n; jj-- > 0;) {
    double s = b[perm[jj]];
    for (std::size_t k = jj + 1; k < n; ++k) s -= a(perm[jj], k) * x[k];
    x[jj] = s / a(perm[jj], jj);
  }
  return x;
}

} // namespace detail

// Solve (A) x = b for symmetric positive (semi)definite A: Cholesky first,
// pivoted Gaussian elimination as fallback.
inline Vector solve_spd(const DenseMatrix& a, const Vector& b) {
  if (a.rows() != a.cols() || b.size() != a.rows())
    throw DimensionMismatch("solve_spd: dimension mismatch");
  const double scale = a.max_abs();
  const double floor_ =
      static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() * scale;
  DenseMatrix l(a);
  if (detail::cholesky(l, floor_)) return detail::cholesky_solve(l, b);
  return detail::gauss_solve(a, b, floor_);
}

// Solve (M^T M + eps_s I) x = rhs with eps_s = (alpha_s/E) trace(M^T M).
inline Vector regularized_normal_solve(const DenseMatrix& m, const Vector& rhs,
                                       const RegularizationPolicy& policy) {
  if (rhs.size() != m.cols())
    throw DimensionMismatch("regularized_normal_solve: rhs length must equal column count");
  DenseMatrix a = normal_matrix(m);
  const double eps_s = regularization_shift(a, policy);
  if (eps_s != 0.0)
    for (std::size_t k = 0; k < a.cols(); ++k) a(k, k) += eps_s;
  return solve_spd(a, rhs);
}

// Degeneracy tolerance: result norms below kGramSchmidtTol * ||v|| count as
// full cancellation.
inline constexpr double kGramSchmidtTol = 1e-12;
// Orthogonality acceptance for the single re-pass check.
inline constexpr double kOrthogonalityTol = 1e-10;

// Classical Gram-Schmidt: subtract the projections of the *original* v onto
// each basis vector in order. When heavy cancellation leaves the residual
// non-orthogonal relative to its own norm, a single re-pass is applied; if
// even the re-pass cannot orthogonalise, the vector is numerically dependent
// on the basis.
inline Vector gram_schmidt_against(const Vector& v, const std::vector<Vector>& basis) {
  const double v_norm = norm2(v);
  if (v_norm == 0.0)
    throw DegenerateVector("gram_schmidt_against: zero input vector");
  auto sweep = [&](const Vector& src) {
    Vector out = src;
    for (const Vector& b : basis) {
      if (b.size() != v.size())
        throw DimensionMismatch("gram_schmidt_against: length mismatch");
      const double denom = dot(b, b);
      if (denom == 0.0) throw DegenerateVector("gram_schmidt_against: zero basis vector");
      const double c = dot(b, src) / denom;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * b[i];
    }
    return out;
  };
  auto orthogonal = [&](const Vector& r, double scale) {
    for (const Vector& b : basis)
      if (std::fabs(dot(b, r)) >= kOrthogonalityTol * scale * norm2(b)) return false;
    return true;
  };
  Vector r = sweep(v);
  double r_norm = norm2(r);
  if (r_norm < kGramSchmidtTol * v_norm)
    throw DegenerateVector("gram_schmidt_against: vector is linearly dependent on the basis");
  if (!orthogonal(r, r_norm)) {
    r = sweep(r);
    r_norm = norm2(r);
    if (r_norm < kGramSchmidtTol * v_norm || !orthogonal(r, r_norm))
      throw DegenerateVector(
          "gram_schmidt_against: vector is numerically dependent on the basis");
  }
  return r;
}

} // namespace ensen::linalg
