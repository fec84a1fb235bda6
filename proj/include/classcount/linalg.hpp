#pragma once

// Small dense linear algebra for moment matrices of order <= ~20.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "classcount/error.hpp"

namespace classcount::linalg {

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Hankel matrix (m[offset + i + j]) of order `order`.
inline Matrix hankel(std::span<const double> m, std::size_t order, std::size_t offset) {
  Matrix h(order, order);
  for (std::size_t i = 0; i < order; ++i)
    for (std::size_t j = 0; j < order; ++j) h(i, j) = m[offset + i + j];
  return h;
}

/// Unpivoted A = L D L' of a symmetric matrix, stopped at the first pivot that falls
/// below `relative_floor` times the largest diagonal entry seen so far.
///
/// Pivot j equals |A_j| / |A_{j-1}| for the leading blocks, so `valid` is the order of
/// the largest leading block that is numerically positive definite.
struct Ldlt {
  Matrix lower;               // unit lower triangular, first `valid` columns meaningful
  std::vector<double> pivots; // d_1..d_valid
  std::size_t valid = 0;

  /// Solves A x = b using the leading `order` block (order <= valid).
  std::vector<double> solve(std::span<const double> b, std::size_t order) const {
    std::vector<double> y(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(order));
    for (std::size_t i = 0; i < order; ++i)
      for (std::size_t k = 0; k < i; ++k) y[i] -= lower(i, k) * y[k];
    for (std::size_t i = 0; i < order; ++i) y[i] /= pivots[i];
    for (std::size_t i = order; i-- > 0;)
      for (std::size_t k = i + 1; k < order; ++k) y[i] -= lower(k, i) * y[k];
    return y;
  }

  /// Product of the leading `order` pivots.
  double determinant(std::size_t order) const {
    double det = 1.0;
    for (std::size_t i = 0; i < order; ++i) det *= pivots[i];
    return det;
  }
};

inline Ldlt ldlt(const Matrix& a, double relative_floor) {
  const std::size_t n = a.rows();
  Ldlt f{Matrix::identity(n), {}, 0};
  double max_diag = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    max_diag = std::max(max_diag, std::abs(a(j, j)));
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= f.lower(j, k) * f.lower(j, k) * f.pivots[k];
    if (!(d > relative_floor * max_diag)) break;
    f.pivots.push_back(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= f.lower(i, k) * f.lower(j, k) * f.pivots[k];
      f.lower(i, j) = s / d;
    }
    f.valid = j + 1;
  }
  return f;
}

/// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(Matrix a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == 0.0) return 0.0;
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a(p, k), a(c, k));
      det = -det;
    }
    det *= a(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double factor = a(r, c) / a(c, c);
      for (std::size_t k = c; k < n; ++k) a(r, k) -= factor * a(c, k);
    }
  }
  return det;
}

/// Solves A x = b by Gaussian elimination with partial pivoting. Throws on singular A.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (std::abs(a(p, c)) < 1e-300) throw NumericalError("singular linear system");
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a(p, k), a(c, k));
      std::swap(b[p], b[c]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double factor = a(r, c) / a(c, c);
      if (factor == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a(r, k) -= factor * a(c, k);
      b[r] -= factor * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(i, k) * x[k];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
struct TridiagonalEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column j is the eigenvector of values[j]
};

/// `diag` has n entries, `off` has n - 1 (off[i] couples i and i + 1).
inline TridiagonalEigen tridiagonal_eigen(std::vector<double> diag, std::vector<double> off) {
  const int n = static_cast<int>(diag.size());
  std::vector<double>& d = diag;
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i + 1 < n; ++i) e[i] = off[i];
  Matrix z = Matrix::identity(static_cast<std::size_t>(n));
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (++iter > 60) throw NumericalError("tridiagonal QL did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        int i = m - 1;
        bool underflow = false;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
  TridiagonalEigen out{std::vector<double>(static_cast<std::size_t>(n)),
                       Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n))};
  for (int j = 0; j < n; ++j) {
    out.values[j] = d[order[j]];
    for (int k = 0; k < n; ++k) out.vectors(k, j) = z(k, order[j]);
  }
  return out;
}

}  // namespace classcount::linalg
