#include "diffpass/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace diffpass::numerics {

namespace {

constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen sym_eig(const Matrix& input) {
  Matrix a = sym(input);
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);
  for (double x : a.data())
    if (!std::isfinite(x)) throw NumericalError("sym_eig: non-finite matrix entry");

  const double scale = std::max(frobenius_norm(a), std::numeric_limits<double>::min());
  bool converged = n <= 1;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    if (off_diagonal_norm(a) <= 1e-15 * scale) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= std::numeric_limits<double>::min()) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p);
          double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k);
          double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p);
          double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && off_diagonal_norm(a) > 1e-12 * scale)
    throw NumericalError("sym_eig: Jacobi iteration did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

double nsd_margin(const Matrix& a) {
  if (!a.square()) throw DimensionError("nsd_margin needs a square matrix, got " + a.shape());
  if (a.rows() == 0) throw DimensionError("nsd_margin of an empty matrix");
  return sym_eig(a).values.back();
}

double psd_margin(const Matrix& a) {
  if (!a.square()) throw DimensionError("psd_margin needs a square matrix, got " + a.shape());
  if (a.rows() == 0) throw DimensionError("psd_margin of an empty matrix");
  return sym_eig(a).values.front();
}

Matrix sqrt_spd(const Matrix& a) {
  SymmetricEigen eig = sym_eig(a);
  const std::size_t n = a.rows();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (eig.values[k] <= 0.0) throw NumericalError("sqrt_spd: matrix is not positive definite");
    double r = std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += r * eig.vectors(i, k) * eig.vectors(j, k);
  }
  return out;
}

Vector solve(const Matrix& input, std::span<const double> b) {
  if (!input.square() || input.rows() != b.size())
    throw DimensionError("solve: shape " + input.shape() + " with rhs of length " + std::to_string(b.size()));
  const std::size_t n = input.rows();
  Matrix a = input;
  Vector x(b.begin(), b.end());
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) <= 1e-14 * scale || scale == 0.0)
      throw NumericalError("solve: matrix is singular to working precision");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
      std::swap(x[col], x[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      x[r] -= f * x[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  if (!a.square() || !q.square() || a.rows() != q.rows())
    throw DimensionError("solve_lyapunov: shapes " + a.shape() + " and " + q.shape());
  const std::size_t n = a.rows();
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P), row-major vec.
  Matrix k(n * n, n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t row = i * n + j;
      for (std::size_t m = 0; m < n; ++m) {
        k(row, m * n + j) += a(m, i);  // (A^T P)_{ij} = sum_m A_{mi} P_{mj}
        k(row, i * n + m) += a(m, j);  // (P A)_{ij} = sum_m P_{im} A_{mj}
      }
    }
  Vector rhs(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) rhs[i * n + j] = -q(i, j);
  Vector p = solve(k, rhs);
  Matrix out(n, n, p);
  return sym(out);
}

double column_condition(const Matrix& a) {
  if (a.rows() < a.cols()) return std::numeric_limits<double>::infinity();
  SymmetricEigen eig = sym_eig(a.transpose() * a);
  double lo = eig.values.front();
  double hi = eig.values.back();
  if (hi <= 0.0) return std::numeric_limits<double>::infinity();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

}  // namespace diffpass::numerics
