#include <cmath>
#include <numbers>
#include <random>

#include "diffpass/numerics/jacobian.hpp"
#include "diffpass/numerics/linalg.hpp"
#include "diffpass/numerics/ode.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace diffpass;
using namespace diffpass::numerics;

TEST_SUITE("numerics") {
  TEST_CASE("dual arithmetic follows the product and chain rules") {
    Ad a(3.0, 1.0), b(2.0, 0.5);
    Ad p = a * b;
    CHECK(p.value == 6.0);
    CHECK(p.deriv == doctest::Approx(3.0 * 0.5 + 1.0 * 2.0));
    Ad s = sin(a);
    CHECK(s.deriv == doctest::Approx(std::cos(3.0)));
    Ad c(5.0);
    CHECK(c.deriv == 0.0);
    Ad q = a / b;
    CHECK(q.deriv == doctest::Approx((1.0 * 2.0 - 3.0 * 0.5) / 4.0));
  }

  TEST_CASE("nested duals give second derivatives") {
    // d^2/dx^2 x^3 at 2 is 12
    Ad2 x(Ad(2.0, 1.0), Ad(1.0, 0.0));
    Ad2 y = x * x * x;
    CHECK(y.deriv.deriv == doctest::Approx(12.0));
    CHECK(ipow(x, 3).deriv.deriv == doctest::Approx(12.0));
  }

  TEST_CASE("jacobian of a linear map is its matrix") {
    Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    auto map = [&](std::span<const Ad> x) { return promote<Ad>(a) * x; };
    Vector x{0.7, -1.3};
    Matrix j = jacobian(map, x);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 2; ++k) CHECK(j(i, k) == a(i, k));
  }

  TEST_CASE("jacobian of -x^3 at 2") {
    auto map = [](std::span<const Ad> x) { return std::vector<Ad>{-(x[0] * x[0] * x[0])}; };
    Vector x{2.0};
    CHECK(jacobian(map, x)(0, 0) == doctest::Approx(-12.0));
  }

  TEST_CASE("jacobian reports the non-finite column") {
    auto map = [](std::span<const Ad> x) { return std::vector<Ad>{x[0] + sqrt(x[1])}; };
    Vector x{1.0, 0.0};
    try {
      (void)jacobian(map, x);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      REQUIRE(e.column().has_value());
      CHECK(*e.column() == 1);
    }
  }

  TEST_CASE("jacobian columns converge to central differences at second order") {
    auto generic = [](const auto& x) {
      using T = std::decay_t<decltype(x[0])>;
      return std::vector<T>{sin(x[0]) * x[1] + x[2] * x[2], exp(0.3 * x[0]) - x[1] * x[2]};
    };
    auto ad_map = [&](std::span<const Ad> x) { return generic(x); };
    auto real_map = [&](const Vector& x) {
      std::vector<double> v(x.begin(), x.end());
      using std::exp;
      using std::sin;
      return Vector{sin(v[0]) * v[1] + v[2] * v[2], exp(0.3 * v[0]) - v[1] * v[2]};
    };
    Vector x{0.4, -0.8, 1.1};
    Matrix j = jacobian(ad_map, x);
    auto err = [&](double h) {
      Matrix fd = oracle::fd_jacobian(real_map, x, h);
      return frobenius_norm(fd - j);
    };
    double e3 = err(1e-3), e4 = err(1e-4);
    double order = std::log10(e3 / e4);
    CHECK(order >= 1.9);
  }

  TEST_CASE("nsd_margin examples") {
    CHECK(nsd_margin(-1.0 * Matrix::identity(2)) == doctest::Approx(-1.0));
    CHECK(std::abs(nsd_margin(Matrix::from_rows({{0, 1}, {-1, 0}}))) <= 1e-15);
  }

  TEST_CASE("nsd_margin agrees with a brute-force quadratic form search") {
    std::mt19937_64 rng(7);
    Matrix a = oracle::random_matrix(4, 4, rng);
    double brute = oracle::brute_force_margin(a, 100000, rng);
    double m = nsd_margin(a);
    CHECK(brute <= m + 1e-12);
    CHECK(m - brute <= 1e-6);
  }

  TEST_CASE("nsd_margin ignores skew parts") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
      Matrix a = oracle::random_matrix(5, 5, rng);
      Matrix b = oracle::random_matrix(5, 5, rng);
      Matrix skew = b - b.transpose();
      CHECK(nsd_margin(a) == nsd_margin(sym(a)));
      CHECK(std::abs(nsd_margin(a + skew) - nsd_margin(a)) <= 1e-12);
    }
  }

  TEST_CASE("sym_eig reconstructs the matrix") {
    std::mt19937_64 rng(3);
    Matrix a = sym(oracle::random_matrix(6, 6, rng));
    SymmetricEigen e = sym_eig(a);
    Matrix recon(6, 6);
    for (std::size_t k = 0; k < 6; ++k)
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) recon(i, j) += e.values[k] * e.vectors(i, k) * e.vectors(j, k);
    CHECK(frobenius_norm(recon - a) <= 1e-12);
    for (std::size_t k = 1; k < 6; ++k) CHECK(e.values[k - 1] <= e.values[k]);
  }

  TEST_CASE("lyapunov solve matches the integral formula") {
    std::mt19937_64 rng(5);
    Matrix a = oracle::random_stable(3, rng);
    Matrix q = Matrix::identity(3);
    Matrix p = solve_lyapunov(a, q);
    Matrix ref = oracle::lyapunov_integral(a, q, 40.0, 4000);
    CHECK(frobenius_norm(p - ref) <= 1e-7 * frobenius_norm(ref));
    CHECK(frobenius_norm(a.transpose() * p + p * a + q) <= 1e-10);
  }

  TEST_CASE("sqrt_spd squares back") {
    std::mt19937_64 rng(9);
    Matrix b = oracle::random_matrix(4, 4, rng);
    Matrix p = b.transpose() * b + Matrix::identity(4);
    Matrix r = sqrt_spd(p);
    CHECK(frobenius_norm(r * r - p) <= 1e-10);
  }

  TEST_CASE("column_condition flags rank deficiency") {
    CHECK(std::isinf(column_condition(Matrix(2, 1))));
    CHECK(column_condition(Matrix::from_rows({{1}, {0}})) == doctest::Approx(1.0));
  }

  TEST_CASE("integrate: zero field keeps the initial state") {
    OdeField zero = [](double, std::span<const double>, std::span<double> d) {
      for (auto& v : d) v = 0.0;
    };
    Vector x0{1.5, -2.0};
    for (Stepper s : {Stepper{FixedRk4{}}, Stepper{AdaptiveRk45{}}}) {
      OdeSolution sol = integrate(zero, x0, 0.0, 1.0, s);
      for (const auto& x : sol.states) CHECK(x == x0);
      CHECK(sol.times.back() == 1.0);
    }
  }

  TEST_CASE("integrate: exponential decay") {
    OdeField decay = [](double, std::span<const double> x, std::span<double> d) { d[0] = -x[0]; };
    Vector x0{1.0};
    OdeSolution rk4 = integrate(decay, x0, 0.0, 1.0, FixedRk4{1e-3});
    CHECK(std::abs(rk4.states.back()[0] - std::exp(-1.0)) <= 1e-9);
    CHECK(rk4.states.front()[0] == 1.0);
    OdeSolution rk45 = integrate(decay, x0, 0.0, 1.0, AdaptiveRk45{});
    CHECK(std::abs(rk45.states.back()[0] - std::exp(-1.0)) <= 1e-7);
    for (std::size_t k = 1; k < rk45.times.size(); ++k) CHECK(rk45.times[k] > rk45.times[k - 1]);
  }

  TEST_CASE("integrate: harmonic oscillator returns after one period") {
    OdeField osc = [](double, std::span<const double> x, std::span<double> d) {
      d[0] = x[1];
      d[1] = -x[0];
    };
    Vector x0{1.0, 0.0};
    OdeSolution sol = integrate(osc, x0, 0.0, 2.0 * std::numbers::pi, FixedRk4{1e-3});
    CHECK(std::abs(sol.states.back()[0] - 1.0) <= 1e-6);
    CHECK(std::abs(sol.states.back()[1]) <= 1e-6);
    CHECK(sol.times.back() == 2.0 * std::numbers::pi);
  }

  TEST_CASE("rk4 global error is fourth order") {
    OdeField decay = [](double, std::span<const double> x, std::span<double> d) { d[0] = -x[0]; };
    Vector x0{1.0};
    auto err = [&](double dt) {
      return std::abs(integrate(decay, x0, 0.0, 1.0, FixedRk4{dt}).states.back()[0] - std::exp(-1.0));
    };
    double ratio = err(0.1) / err(0.05);
    CHECK(ratio >= 14.0);
    CHECK(ratio <= 18.0);
  }

  TEST_CASE("sampled output lands on the sample grid") {
    OdeField decay = [](double, std::span<const double> x, std::span<double> d) { d[0] = -x[0]; };
    Vector x0{1.0};
    for (Stepper s : {Stepper{FixedRk4{3e-3}}, Stepper{AdaptiveRk45{1e-10}}}) {
      OdeSolution sol = integrate(decay, x0, 0.0, 1.0, s, 0.01);
      REQUIRE(sol.times.size() == 101);
      CHECK(sol.times[50] == doctest::Approx(0.5).epsilon(1e-14));
      CHECK(std::abs(sol.states[50][0] - std::exp(-0.5)) <= 1e-9);
    }
  }

  TEST_CASE("integration errors carry the last good time") {
    OdeField blowup = [](double, std::span<const double> x, std::span<double> d) { d[0] = x[0] * x[0]; };
    Vector x0{1.0};
    try {
      (void)integrate(blowup, x0, 0.0, 2.0, FixedRk4{1e-2});
      FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
      CHECK(e.last_good_time() < 1.1);
      CHECK(e.last_good_time() > 0.9);
    }
    CHECK_THROWS_AS((void)integrate(blowup, x0, 0.0, 2.0, AdaptiveRk45{}), IntegrationError);
    CHECK_THROWS_AS((void)integrate(blowup, x0, 0.0, 1.0, FixedRk4{0.0}), InvalidArgument);
  }
}
