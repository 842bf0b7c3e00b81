#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "diffpass/errors.hpp"
#include "diffpass/numerics/dual.hpp"
#include "diffpass/numerics/leveled.hpp"
#include "diffpass/numerics/matrix.hpp"

namespace diffpass::numerics {

/// Jacobian of `map` at x, one forward sweep per column. `map` is any callable
/// taking std::span<const Dual<T>> and returning std::vector<Dual<T>>.
/// At the real level a non-finite column raises NumericalError naming it.
template <class T, class Map>
MatrixT<T> jacobian_of(const Map& map, std::span<const T> x) {
  const std::size_t n = x.size();
  if (n == 0) throw DimensionError("jacobian needs at least one input");
  std::vector<Dual<T>> xd(n);
  for (std::size_t i = 0; i < n; ++i) xd[i] = Dual<T>(x[i], T(0.0));
  MatrixT<T> jac;
  for (std::size_t j = 0; j < n; ++j) {
    xd[j].deriv = T(1.0);
    std::vector<Dual<T>> col = map(std::span<const Dual<T>>(xd));
    xd[j].deriv = T(0.0);
    if (j == 0) {
      if (col.empty()) throw DimensionError("jacobian of a map with empty output");
      jac = MatrixT<T>(col.size(), n);
    } else if (col.size() != jac.rows()) {
      throw DimensionError("map output length changed between Jacobian columns");
    }
    for (std::size_t i = 0; i < col.size(); ++i) {
      if constexpr (std::is_same_v<T, double>) {
        if (!std::isfinite(col[i].deriv) || !std::isfinite(col[i].value))
          throw NumericalError("non-finite Jacobian entry in column " + std::to_string(j), j);
      }
      jac(i, j) = col[i].deriv;
    }
  }
  return jac;
}

/// Jacobian of a dual-evaluable map R^n -> R^m at a real point.
inline Matrix jacobian(const std::function<std::vector<Ad>(std::span<const Ad>)>& map, std::span<const double> x) {
  return jacobian_of<double>(map, x);
}

/// Jacobian of a leveled field in its state argument at level T.
template <class T>
MatrixT<T> jacobian(const VecField& field, double t, std::span<const T> x) {
  const auto& fn = field.at<Dual<T>>();
  return jacobian_of<T>([&](std::span<const Dual<T>> xd) { return fn(t, xd); }, x);
}

/// D field(x)[v]: directional derivative at level T.
template <class T>
std::vector<T> directional(const VecField& field, double t, std::span<const T> x, std::span<const T> v) {
  auto xd = seed<T>(x, v);
  return tangent(field.at<Dual<T>>()(t, std::span<const Dual<T>>(xd)));
}

/// D G(x)[v] for a matrix field, together with G(x) itself.
template <class T>
std::pair<MatrixT<T>, MatrixT<T>> directional(const MatField& field, double t, std::span<const T> x,
                                              std::span<const T> v) {
  auto xd = seed<T>(x, v);
  MatrixT<Dual<T>> g = field.at<Dual<T>>()(t, std::span<const Dual<T>>(xd));
  return {value_part(g), tangent(g)};
}

/// Gradient of a scalar field at level T (needs the field at Dual<T>).
template <class T>
std::vector<T> gradient(const ScalarField& m, std::span<const T> x) {
  const auto& fn = m.at<Dual<T>>();
  std::vector<Dual<T>> xd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xd[i] = Dual<T>(x[i], T(0.0));
  std::vector<T> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    xd[j].deriv = T(1.0);
    grad[j] = fn(std::span<const Dual<T>>(xd)).deriv;
    xd[j].deriv = T(0.0);
  }
  return grad;
}

/// Hessian of a scalar field at a real point through nested duals.
inline Matrix hessian(const ScalarField& m, std::span<const double> x) {
  const std::size_t n = x.size();
  const auto& fn = m.at<Ad2>();
  Matrix hess(n, n);
  std::vector<Ad2> xd(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t i = 0; i < n; ++i)
        xd[i] = Ad2(Ad(x[i], i == a ? 1.0 : 0.0), Ad(i == b ? 1.0 : 0.0, 0.0));
      hess(a, b) = fn(std::span<const Ad2>(xd)).deriv.deriv;
    }
  }
  return hess;
}

}  // namespace diffpass::numerics
