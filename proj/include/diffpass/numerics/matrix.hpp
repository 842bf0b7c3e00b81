#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "diffpass/errors.hpp"
#include "diffpass/numerics/dual.hpp"

namespace diffpass::numerics {

/// Dense row-major matrix over a scalar that is either double or a Dual.
template <class T>
class MatrixT {
 public:
  MatrixT() = default;
  MatrixT(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0.0)) {}
  MatrixT(std::size_t rows, std::size_t cols, std::vector<T> row_major)
      : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (data_.size() != rows_ * cols_) throw DimensionError("matrix data size does not match shape");
  }

  static MatrixT identity(std::size_t n) {
    MatrixT m(n, n);
    for (std::size_t k = 0; k < n; ++k) m(k, k) = T(1.0);
    return m;
  }

  static MatrixT from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    MatrixT m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = T(v);
      ++i;
    }
    return m;
  }

  static MatrixT column(std::span<const T> v) {
    MatrixT m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
  }

  static MatrixT diagonal(std::span<const T> v) {
    MatrixT m(v.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) m(i, i) = v[i];
    return m;
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] bool square() const { return rows_ == cols_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<const T> data() const { return data_; }
  [[nodiscard]] std::span<T> data() { return data_; }

  [[nodiscard]] std::vector<T> col(std::size_t c) const {
    std::vector<T> v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  [[nodiscard]] MatrixT transpose() const {
    MatrixT t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  MatrixT& operator+=(const MatrixT& o) {
    check_same(o, "+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  MatrixT& operator-=(const MatrixT& o) {
    check_same(o, "-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }

  friend MatrixT operator+(MatrixT a, const MatrixT& b) { return a += b; }
  friend MatrixT operator-(MatrixT a, const MatrixT& b) { return a -= b; }
  friend MatrixT operator-(MatrixT a) {
    for (auto& v : a.data_) v = -v;
    return a;
  }

  friend MatrixT operator*(const MatrixT& a, const MatrixT& b) {
    if (a.cols_ != b.rows_)
      throw DimensionError("matrix product " + a.shape() + " * " + b.shape());
    MatrixT out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T& aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend MatrixT operator*(double s, MatrixT a) {
    for (auto& v : a.data_) v = s * v;
    return a;
  }

  friend std::vector<T> operator*(const MatrixT& a, std::span<const T> x) {
    if (a.cols_ != x.size())
      throw DimensionError("matrix-vector product " + a.shape() + " * " + std::to_string(x.size()));
    std::vector<T> y(a.rows_, T(0.0));
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) y[i] += a(i, j) * x[j];
    return y;
  }
  friend std::vector<T> operator*(const MatrixT& a, const std::vector<T>& x) {
    return a * std::span<const T>(x);
  }

  [[nodiscard]] std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

 private:
  void check_same(const MatrixT& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionError(std::string("matrix ") + op + " " + shape() + " vs " + o.shape());
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = MatrixT<double>;
using Vector = std::vector<double>;

/// sym(A) = (A + A^T) / 2.
inline Matrix sym(const Matrix& a) {
  if (!a.square()) throw DimensionError("sym of non-square matrix " + a.shape());
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = (a(i, j) + a(j, i)) / 2.0;
  return s;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot product of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Promotes a real matrix to any scalar level (zero derivative parts).
template <class T>
MatrixT<T> promote(const Matrix& m) {
  MatrixT<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = T(m(i, j));
  return out;
}

template <class T>
std::vector<T> promote(std::span<const double> v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = T(v[i]);
  return out;
}

template <class T>
Matrix primal(const MatrixT<T>& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = primal(m(i, j));
  return out;
}

template <class T>
Vector primal(std::span<const T> v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = primal(v[i]);
  return out;
}

/// Stacks blocks into a block-diagonal matrix.
template <class T>
MatrixT<T> block_diagonal(const MatrixT<T>& a, const MatrixT<T>& b) {
  MatrixT<T> out(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, a.cols() + j) = b(i, j);
  return out;
}

}  // namespace diffpass::numerics
