#pragma once

#include <functional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "diffpass/errors.hpp"
#include "diffpass/numerics/dual.hpp"
#include "diffpass/numerics/matrix.hpp"

namespace diffpass::numerics {

// A model map must be evaluable over reals and over nested duals so that
// Jacobians of derived maps (lifted fields, composite closed loops, gradient
// feedbacks) can be formed by forward mode. LeveledFn stores one
// std::function per scalar level; `generic` instantiates a generic lambda at
// every level.

template <class T>
using VecFnSig = std::vector<T>(double, std::span<const T>);
template <class T>
using MatFnSig = MatrixT<T>(double, std::span<const T>);
template <class T>
using StateMatSig = MatrixT<T>(std::span<const T>);
template <class T>
using ScalarFieldSig = T(std::span<const T>);

template <template <class> class Sig>
class LeveledFn {
 public:
  LeveledFn() = default;

  template <class F>
  static LeveledFn generic(const F& fn) {
    LeveledFn out;
    std::get<0>(out.levels_) = fn;
    std::get<1>(out.levels_) = fn;
    std::get<2>(out.levels_) = fn;
    std::get<3>(out.levels_) = fn;
    return out;
  }

  template <class T>
  [[nodiscard]] bool has() const {
    return static_cast<bool>(std::get<std::function<Sig<T>>>(levels_));
  }

  template <class T>
  const std::function<Sig<T>>& at() const {
    const auto& fn = std::get<std::function<Sig<T>>>(levels_);
    if (!fn) throw NumericalError("map is not available at the requested differentiation depth");
    return fn;
  }

  template <class T>
  void set(std::function<Sig<T>> fn) {
    std::get<std::function<Sig<T>>>(levels_) = std::move(fn);
  }

  explicit operator bool() const { return has<double>(); }

 private:
  std::tuple<std::function<Sig<double>>, std::function<Sig<Ad>>, std::function<Sig<Ad2>>,
             std::function<Sig<Ad3>>>
      levels_;
};

using VecField = LeveledFn<VecFnSig>;
using MatField = LeveledFn<MatFnSig>;
using StateMatField = LeveledFn<StateMatSig>;
using ScalarField = LeveledFn<ScalarFieldSig>;

/// Constant matrix as a state-dependent field.
inline StateMatField constant_field(const Matrix& m) {
  return StateMatField::generic([m](auto x) {
    using T = typename decltype(x)::value_type;
    return promote<T>(m);
  });
}

inline MatField constant_time_field(const Matrix& m) {
  return MatField::generic([m](double, auto x) {
    using T = typename decltype(x)::value_type;
    return promote<T>(m);
  });
}

/// Tangent part of a vector of duals.
template <class T>
std::vector<T> tangent(const std::vector<Dual<T>>& v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].deriv;
  return out;
}

template <class T>
std::vector<T> value_part(const std::vector<Dual<T>>& v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].value;
  return out;
}

template <class T>
MatrixT<T> tangent(const MatrixT<Dual<T>>& m) {
  MatrixT<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).deriv;
  return out;
}

template <class T>
MatrixT<T> value_part(const MatrixT<Dual<T>>& m) {
  MatrixT<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).value;
  return out;
}

/// Seeds x along direction v one level up.
template <class T>
std::vector<Dual<T>> seed(std::span<const T> x, std::span<const T> v) {
  if (x.size() != v.size()) throw DimensionError("seed direction has wrong length");
  std::vector<Dual<T>> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = Dual<T>(x[i], v[i]);
  return out;
}

}  // namespace diffpass::numerics
