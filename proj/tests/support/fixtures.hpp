#pragma once

#include "diffpass/systems/system.hpp"

namespace fixture {

using diffpass::numerics::Matrix;
using diffpass::numerics::MatrixT;
using diffpass::systems::DynSystem;

/// x' = A x + B u, y = C x.
inline DynSystem linear(const Matrix& a, const Matrix& b, const Matrix& c) {
  return diffpass::systems::make_system(
      a.rows(), b.cols(),
      [a](double, auto x) {
        using T = typename decltype(x)::value_type;
        return diffpass::numerics::promote<T>(a) * x;
      },
      [b](double, auto x) {
        using T = typename decltype(x)::value_type;
        return diffpass::numerics::promote<T>(b);
      },
      [c](double, auto x) {
        using T = typename decltype(x)::value_type;
        return diffpass::numerics::promote<T>(c) * x;
      });
}

/// Scalar x' = f(x) + u, y = x.
template <class F>
DynSystem scalar(const F& f) {
  return diffpass::systems::make_system(
      1, 1, [f](double, auto x) { return std::vector{f(x[0])}; },
      [](double, auto x) {
        using T = typename decltype(x)::value_type;
        return MatrixT<T>(1, 1, {T(1.0)});
      },
      [](double, auto x) { return std::vector{x[0]}; });
}

}  // namespace fixture

#include "diffpass/dissipativity/storage.hpp"

namespace fixture {

/// Separable quartic potential m(x) = sum 1/2 x_i^2 + 1/4 x_i^4.
inline diffpass::numerics::ScalarField quartic_potential() {
  return diffpass::numerics::ScalarField::generic([](auto x) {
    using T = typename decltype(x)::value_type;
    T s(0.0);
    for (const T& v : x) s += 0.5 * v * v + 0.25 * v * v * v * v;
    return s;
  });
}

/// Lossy gradient system  x' = M^-1 (-c grad m + Pi u),  y = W^-1 Pi' grad m,
/// with the quartic potential. It satisfies the UC conditions with M = Hess m,
/// the given Pi and the constant tensor W.
inline diffpass::dissipativity::PassiveSystem lossy_gradient(const Matrix& pi, const Matrix& w, double c) {
  using namespace diffpass;
  const std::size_t n = pi.rows();
  Matrix wi_pit = [&] {
    // W is 1x1 or 2x2 in the tests
    Matrix inv(w.rows(), w.cols());
    if (w.rows() == 1) {
      inv(0, 0) = 1.0 / w(0, 0);
    } else {
      double det = w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0);
      inv = Matrix::from_rows({{w(1, 1) / det, -w(0, 1) / det}, {-w(1, 0) / det, w(0, 0) / det}});
    }
    return inv * pi.transpose();
  }();
  auto grad = [](auto x) {
    using T = typename decltype(x)::value_type;
    std::vector<T> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] + x[i] * x[i] * x[i];
    return g;
  };
  auto sys = systems::make_system(
      n, pi.cols(),
      [grad, c](double, auto x) {
        auto g = grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = -c * g[i] / (1.0 + 3.0 * x[i] * x[i]);
        return g;
      },
      [pi](double, auto x) {
        using T = typename decltype(x)::value_type;
        MatrixT<T> g = numerics::promote<T>(pi);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = g(i, j) / (1.0 + 3.0 * x[i] * x[i]);
        return g;
      },
      [grad, wi_pit](double, auto x) {
        using T = typename decltype(x)::value_type;
        return numerics::promote<T>(wi_pit) * grad(x);
      });
  dissipativity::PassiveSystem p;
  p.system = sys;
  p.storage = dissipativity::hessian_storage(n, quartic_potential());
  p.supply = dissipativity::constant_supply(w);
  p.name = "gradient";
  return p;
}

}  // namespace fixture
