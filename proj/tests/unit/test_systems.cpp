#include <cmath>
#include <random>

#include "diffpass/numerics/jacobian.hpp"
#include "diffpass/systems/system.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace diffpass;
using namespace diffpass::systems;
using numerics::FixedRk4;

namespace {

DynSystem cubic() { return fixture::scalar([](auto x) { return -(x * x * x); }); }

using fixture::linear;

DynSystem first_order() {
  return linear(Matrix::from_rows({{-1}}), Matrix::from_rows({{1}}), Matrix::from_rows({{1}}));
}

}  // namespace

TEST_SUITE("systems") {
  TEST_CASE("signals") {
    Signal s = Signal::sampled({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0});
    CHECK(s.value(0.5) == 1.0);
    CHECK(s.value(2.0) == 1.0);
    CHECK(s.deriv(2.0) == -1.0);
    CHECK(s.defined_on(0.0, 3.0));
    CHECK_FALSE(s.defined_on(0.0, 3.5));
    Signal a = Signal::analytic("sin(2*t)");
    CHECK(a.value(0.3) == doctest::Approx(std::sin(0.6)));
    CHECK(a.deriv(0.3) == doctest::Approx(2 * std::cos(0.6)));
    CHECK(a.deriv2(0.3) == doctest::Approx(-4 * std::sin(0.6)));
    CHECK_THROWS_AS((void)Signal::analytic("x + t"), InvalidArgument);
    CHECK_THROWS_AS((void)Signal::closure([](double t) { return t; }).deriv(0.0), InvalidArgument);
    CHECK(Signal().value(4.0) == 0.0);
  }

  TEST_CASE("lift of an LTI system repeats its matrices") {
    Matrix a = Matrix::from_rows({{-1, 2}, {0, -3}});
    Matrix b = Matrix::from_rows({{1}, {0.5}});
    Matrix c = Matrix::from_rows({{2, -1}});
    DynSystem l = lift(linear(a, b, c));
    Vector z{0.3, -0.2, 1.0, 2.0};
    Matrix jf = numerics::jacobian<double>(l.f, 0.0, std::span<const double>(z));
    Matrix g = l.g.at<double>()(0.0, z);
    Matrix jh = numerics::jacobian<double>(l.h, 0.0, std::span<const double>(z));
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(jf(2 + i, 2 + j) == a(i, j));
        CHECK(jf(2 + i, j) == 0.0);
      }
      CHECK(g(2 + i, 1) == b(i, 0));
      CHECK(g(2 + i, 0) == 0.0);
    }
    CHECK(jh(1, 2) == c(0, 0));
    CHECK(jh(1, 3) == c(0, 1));
  }

  TEST_CASE("lift of -x^3") {
    DynSystem l = lift(cubic());
    Vector z{1.5, 2.0};
    Vector u{0.7, -0.4};
    Vector d = l.xdot<double>(0.0, z, u);
    CHECK(d[0] == doctest::Approx(-1.5 * 1.5 * 1.5 + 0.7));
    CHECK(d[1] == doctest::Approx(-3 * 1.5 * 1.5 * 2.0 - 0.4));
  }

  TEST_CASE("lift output includes the throughput terms") {
    DynSystem s = first_order();
    s.i = MatField::generic([](double, auto x) {
      using T = typename decltype(x)::value_type;
      return MatrixT<T>(1, 1, {T(1.0) + x[0] * x[0]});
    });
    DynSystem l = lift(s);
    double x = 0.8, dx = -0.3, u = 1.7, du = 0.25;
    Vector z{x, dx}, uu{u, du};
    Vector y = l.output<double>(0.0, z, uu);
    CHECK(y[0] == doctest::Approx(x + (1 + x * x) * u));
    CHECK(y[1] == doctest::Approx(dx + 2 * x * u * dx + (1 + x * x) * du));
  }

  TEST_CASE("simulate first-order examples") {
    DynSystem s = first_order();
    Vector x0{1.0};
    auto tr = simulate(s, x0, zero_signals(1), 1.0);
    CHECK(std::abs(tr.y.back()[0] - std::exp(-1.0)) <= 1e-8);
    Vector z0{0.0};
    auto tr2 = simulate(s, z0, {Signal::constant(1.0)}, 1.0);
    CHECK(std::abs(tr2.x.back()[0] - (1 - std::exp(-1.0))) <= 1e-8);
    CHECK_THROWS_AS((void)simulate(s, x0, zero_signals(2), 1.0), DimensionError);
    CHECK_THROWS_AS((void)simulate(s, x0, {Signal::sampled({0, 0.5}, {0, 1})}, 1.0), InvalidArgument);
  }

  TEST_CASE("zero displacement stays zero") {
    Vector x0{1.2}, dx0{0.0};
    auto tr = simulate_prolonged(cubic(), x0, dx0, zero_signals(1), zero_signals(1), 2.0);
    for (const auto& d : tr.dx) CHECK(d[0] == 0.0);
    CHECK(tr.x.size() == tr.times.size());
    CHECK(tr.dy.size() == tr.times.size());
  }

  TEST_CASE("LTI displacement equals the difference of two solutions") {
    std::mt19937_64 rng(1);
    Matrix a = oracle::random_stable(3, rng);
    Matrix b = oracle::random_matrix(3, 1, rng);
    Matrix c = oracle::random_matrix(1, 3, rng);
    DynSystem s = linear(a, b, c);
    Vector x0{0.2, -1.0, 0.4}, dx0{1.0, 0.5, -0.3};
    Vector x1 = x0;
    for (int k = 0; k < 3; ++k) x1[k] += dx0[k];
    SignalVec u{Signal::analytic("sin(t)")};
    auto pr = simulate_prolonged(s, x0, dx0, u, zero_signals(1), 2.0);
    auto t0 = simulate(s, x0, u, 2.0);
    auto t1 = simulate(s, x1, u, 2.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < pr.size(); ++k)
      for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(pr.dx[k][i] - (t1.x[k][i] - t0.x[k][i])));
    CHECK(worst <= 1e-12);
    Matrix e = oracle::expm(a, 2.0);
    Vector ref = e * dx0;
    for (int i = 0; i < 3; ++i) CHECK(std::abs(pr.dx.back()[i] - ref[i]) <= 1e-9);
  }

  TEST_CASE("cubic displacement matches the quadrature oracle") {
    Vector x0{1.0}, dx0{1.0};
    auto tr = simulate_prolonged(cubic(), x0, dx0, zero_signals(1), zero_signals(1), 3.0);
    double integral = 0.0;
    double worst = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
      double h = tr.times[k] - tr.times[k - 1];
      integral += 0.5 * h * (tr.x[k - 1][0] * tr.x[k - 1][0] + tr.x[k][0] * tr.x[k][0]);
      worst = std::max(worst, std::abs(tr.dx[k][0] - std::exp(-3.0 * integral)));
    }
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("variational flow is linear in the initial displacement") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    DynSystem s = cubic();
    Vector x0{0.7};
    SignalVec u{Signal::analytic("cos(3*t)")};
    for (int k = 0; k < 10; ++k) {
      Vector a{nd(rng)}, b{nd(rng)};
      double lam = nd(rng);
      auto ta = simulate_prolonged(s, x0, a, u, zero_signals(1), 1.0);
      auto tb = simulate_prolonged(s, x0, b, u, zero_signals(1), 1.0);
      Vector ab{a[0] + b[0]}, la{lam * a[0]};
      auto tab = simulate_prolonged(s, x0, ab, u, zero_signals(1), 1.0);
      auto tla = simulate_prolonged(s, x0, la, u, zero_signals(1), 1.0);
      CHECK(std::abs(tab.dx.back()[0] - ta.dx.back()[0] - tb.dx.back()[0]) <= 1e-12);
      CHECK(std::abs(tla.dx.back()[0] - lam * ta.dx.back()[0]) <= 1e-12);
    }
  }

  TEST_CASE("displacement is the first-order limit of forward differences") {
    DynSystem s = cubic();
    Vector x0{0.9}, v{1.0};
    SignalVec u{Signal::analytic("sin(t)")};
    auto pr = simulate_prolonged(s, x0, v, u, zero_signals(1), 1.0);
    auto base = simulate(s, x0, u, 1.0);
    auto err = [&](double eps) {
      Vector xe{x0[0] + eps * v[0]};
      auto te = simulate(s, xe, u, 1.0);
      double worst = 0.0;
      for (std::size_t k = 0; k < pr.size(); ++k)
        worst = std::max(worst, std::abs(pr.dx[k][0] - (te.x[k][0] - base.x[k][0]) / eps));
      return worst;
    };
    double order = std::log10(err(1e-3) / err(1e-4));
    CHECK(order >= 0.9);
  }

  TEST_CASE("base dynamics read back out of a lift lift to the same system") {
    DynSystem s = cubic();
    DynSystem l = lift(s);
    DynSystem again = lift(base_of_lift(l, 1, 1));
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 20; ++k) {
      Vector z{nd(rng), nd(rng)}, u{nd(rng), nd(rng)};
      Vector d1 = l.xdot<double>(0.0, z, u), d2 = again.xdot<double>(0.0, z, u);
      Vector y1 = l.output<double>(0.0, z, u), y2 = again.output<double>(0.0, z, u);
      CHECK(d1 == d2);
      CHECK(y1 == y2);
    }
  }
}
