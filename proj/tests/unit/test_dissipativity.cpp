#include <cmath>
#include <random>

#include "diffpass/dissipativity/audit.hpp"
#include "diffpass/dissipativity/certificate.hpp"
#include "diffpass/numerics/linalg.hpp"
#include "diffpass/numerics/random.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace diffpass;
using namespace diffpass::dissipativity;
using systems::Signal;
using systems::SignalVec;
using systems::DynSystem;

namespace {

Matrix I1() { return Matrix::from_rows({{1}}); }

DynSystem two_state(double a) {
  return fixture::linear(Matrix::from_rows({{a, 0}, {0, a}}), Matrix::from_rows({{1}, {0}}),
                         Matrix::from_rows({{1, 0}}));
}

DynSystem with_throughput(DynSystem sys, numerics::MatField i) {
  sys.i = std::move(i);
  return sys;
}

}  // namespace

TEST_SUITE("dissipativity") {
  TEST_CASE("storage examples") {
    auto s = constant_storage(Matrix::identity(2));
    CHECK(storage_eval(s, std::vector{0.3, -1.0}, std::vector{3.0, 4.0}) == 12.5);
    CHECK(storage_eval(s, std::vector{0.3, -1.0}, std::vector{0.0, 0.0}) == 0.0);

    QuadraticDifferentialStorage v;
    v.n = 2;
    v.M = StateMatField::generic([](auto x) {
      using T = typename decltype(x)::value_type;
      return MatrixT<T>(2, 2, {T(1.0), T(0.0), T(0.0), 1.0 + x[0] * x[0]});
    });
    // brute substitution: M dx = (0, 2), half its squared norm is 2
    CHECK(storage_eval(v, std::vector{1.0, 0.0}, std::vector{0.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)storage_eval(v, std::vector{1.0}, std::vector{0.0, 1.0}), DimensionError);
    CHECK_THROWS_AS((void)constant_storage(Matrix(2, 3)), DimensionError);
  }

  TEST_CASE("supply examples") {
    auto w = constant_supply(Matrix::identity(2));
    CHECK(supply_eval(w, {}, std::vector{1.0, 0.0}, std::vector{0.0, 1.0}) == 0.0);
    CHECK(supply_eval(w, {}, std::vector{1.0, 1.0}, std::vector{1.0, 1.0}) == 2.0);

    // W(q) = 1 / d mu(q), mu(q) = q + q^3
    SupplyRate rc;
    rc.q = 1;
    rc.W = StateMatField::generic([](auto x) {
      using T = typename decltype(x)::value_type;
      return MatrixT<T>(1, 1, {1.0 / (1.0 + 3.0 * x[0] * x[0])});
    });
    CHECK(supply_eval(rc, std::vector{1.0}, std::vector{2.0}, std::vector{1.0}) == doctest::Approx(0.5));

    w.output_gain = 0.5;
    CHECK(supply_eval(w, {}, std::vector{1.0, 1.0}, std::vector{1.0, 1.0}) == doctest::Approx(1.0));

    auto bad = constant_supply(Matrix::from_rows({{1, 2}, {0, 1}}));
    CHECK_THROWS_AS((void)supply_eval(bad, {}, std::vector{1.0, 0.0}, std::vector{0.0, 1.0}), InvalidSupply);
    CHECK_THROWS_AS((void)supply_eval(w, {}, std::vector{1.0}, std::vector{0.0, 1.0}), DimensionError);
    CHECK_THROWS_AS((void)constant_supply(Matrix(1, 2)), InvalidSupply);
  }

  TEST_CASE("storage gradient and rate agree with finite differences") {
    QuadraticDifferentialStorage s;
    s.n = 2;
    s.M = StateMatField::generic([](auto x) {
      using T = typename decltype(x)::value_type;
      return MatrixT<T>(2, 2, {2.0 + sin(x[0]), x[1], T(0.0), 1.0 + x[0] * x[1]});
    });
    Vector x{0.4, -0.7}, dx{1.2, 0.3}, xd{0.5, 2.0}, dxd{-1.0, 0.25};
    auto g = storage_gradient(s, x, dx);
    const double h = 1e-6;
    for (std::size_t j = 0; j < 2; ++j) {
      Vector xp = x, xm = x, dp = dx, dm = dx;
      xp[j] += h;
      xm[j] -= h;
      dp[j] += h;
      dm[j] -= h;
      CHECK(g.d_x[j] == doctest::Approx((storage_eval(s, xp, dx) - storage_eval(s, xm, dx)) / (2 * h)).epsilon(1e-7));
      CHECK(g.d_dx[j] == doctest::Approx((storage_eval(s, x, dp) - storage_eval(s, x, dm)) / (2 * h)).epsilon(1e-7));
    }
    double chain = numerics::dot(g.d_x, xd) + numerics::dot(g.d_dx, dxd);
    CHECK(storage_rate(s, x, dx, xd, dxd) == doctest::Approx(chain).epsilon(1e-14));
  }

  TEST_CASE("audit of a passive first-order system") {
    auto sys = fixture::linear(-1.0 * I1(), I1(), I1());
    SignalVec u{Signal::analytic("sin(t)")}, du{Signal::analytic("0.3*cos(2*t)")};
    auto traj = systems::simulate_prolonged(sys, std::vector{0.5}, std::vector{1.0}, u, du, 5.0,
                                            {.stepper = numerics::FixedRk4{1e-3}, .sample_dt = 0.01});
    auto r = audit(traj, constant_storage(I1()), constant_supply(I1()));
    CHECK(r.pass);
    REQUIRE(r.slack.size() == traj.size());
    double err = 0.0;
    for (std::size_t k = 0; k < r.slack.size(); ++k) err = std::max(err, std::abs(r.slack[k] - traj.dx[k][0] * traj.dx[k][0]));
    CHECK(err < 1e-12);
    CHECK(traj.S.size() == traj.size());
    CHECK(traj.Q[3] == r.Q[3]);
    // the integral slack is the time integral of the pointwise slack
    CHECK(r.worst_integral_violation <= 1e-6);
  }

  TEST_CASE("audit flags an anti-passive system") {
    auto sys = fixture::linear(I1(), I1(), I1());
    auto traj = systems::simulate_prolonged(sys, std::vector{0.1}, std::vector{1.0}, systems::zero_signals(1),
                                            systems::zero_signals(1), 1.0, {.sample_dt = 0.1});
    auto r = audit(traj, constant_storage(I1()), constant_supply(I1()));
    CHECK_FALSE(r.pass);
    CHECK(r.worst_violation > 0.0);
    // slack = -dx^2 with dx = e^t, largest at the final sample
    CHECK(r.worst_index == traj.size() - 1);
    CHECK(r.worst_violation == doctest::Approx(std::exp(2.0)).epsilon(1e-9));
  }

  TEST_CASE("audit errors") {
    auto sys = fixture::linear(-1.0 * I1(), I1(), I1());
    auto traj = systems::simulate_prolonged(sys, std::vector{0.0}, std::vector{1.0}, systems::zero_signals(1),
                                            systems::zero_signals(1), 0.1, {.sample_dt = 0.05});
    SupplyRate sing;
    sing.q = 1;
    sing.W = StateMatField::generic([](auto x) {
      using T = typename decltype(x)::value_type;
      return MatrixT<T>(1, 1, {1.0 / x[0]});
    });
    CHECK_THROWS_AS((void)audit(traj, constant_storage(I1()), sing), SupplyIntegrabilityError);
    CHECK_THROWS_AS((void)audit(traj, constant_storage(Matrix::identity(2)), constant_supply(I1())), DimensionError);
    auto broken = traj;
    broken.xdot.pop_back();
    CHECK_THROWS_AS((void)audit(broken, constant_storage(I1()), constant_supply(I1())), InvalidArgument);
    systems::ProlongedTrajectory empty;
    CHECK_THROWS_AS((void)audit(empty, constant_storage(I1()), constant_supply(I1())), InvalidArgument);
  }

  TEST_CASE("audit with state-strict rate") {
    // x' = -a x + u, y = x: dS/dt = -2a S + dy du, so alpha(s) = 2a s is tight
    const double a = 0.7;
    auto sys = fixture::linear(-a * I1(), I1(), I1());
    auto traj = systems::simulate_prolonged(sys, std::vector{0.0}, std::vector{1.0}, {Signal::analytic("sin(t)")},
                                            {Signal::analytic("cos(3*t)")}, 3.0, {.sample_dt = 0.01});
    auto w = constant_supply(I1());
    w.state_rate = {2 * a, 1.0};
    auto tight = audit(traj, constant_storage(I1()), w);
    CHECK(tight.pass);
    CHECK(std::abs(tight.worst_violation) < 1e-12);
    w.state_rate = {2 * a + 0.1, 1.0};
    CHECK_FALSE(audit(traj, constant_storage(I1()), w).pass);
  }

  TEST_CASE("LTI audit equals the classical audit of the difference dynamics") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t n = 3, q = 2;
      Matrix a = oracle::random_stable(n, rng);
      Matrix b = oracle::random_matrix(n, q, rng);
      Matrix p = numerics::solve_lyapunov(a, Matrix::identity(n));
      Matrix c = b.transpose() * p;
      auto sys = fixture::linear(a, b, c);
      SignalVec u1{Signal::analytic("sin(t)"), Signal::analytic("0.5*cos(2*t)")};
      SignalVec u2{Signal::analytic("0.2*t"), Signal::analytic("exp(-t)")};
      SignalVec du{Signal::analytic("sin(t) - 0.2*t"), Signal::analytic("0.5*cos(2*t) - exp(-t)")};
      std::normal_distribution<double> nd;
      Vector x1(n), x2(n), d0(n);
      for (std::size_t k = 0; k < n; ++k) {
        x1[k] = nd(rng);
        x2[k] = nd(rng);
        d0[k] = x1[k] - x2[k];
      }
      systems::SimOptions opts{.stepper = numerics::FixedRk4{1e-3}, .sample_dt = 0.05};
      auto t1 = systems::simulate(sys, x1, u1, 4.0, opts);
      auto t2 = systems::simulate(sys, x2, u2, 4.0, opts);
      auto traj = systems::simulate_prolonged(sys, x1, d0, u1, du, 4.0, opts);
      auto storage = constant_storage(numerics::sqrt_spd(p));
      auto r = audit(traj, storage, constant_supply(Matrix::identity(q)));
      REQUIRE(t1.times.size() == traj.size());
      double ds = 0.0, dq = 0.0;
      for (std::size_t k = 0; k < traj.size(); ++k) {
        Vector dxk(n), dyk(q), duk(q);
        for (std::size_t i = 0; i < n; ++i) dxk[i] = t1.x[k][i] - t2.x[k][i];
        for (std::size_t i = 0; i < q; ++i) {
          dyk[i] = t1.y[k][i] - t2.y[k][i];
          duk[i] = t1.u[k][i] - t2.u[k][i];
        }
        double s_classic = 0.5 * numerics::dot(dxk, p * dxk);
        double q_classic = numerics::dot(dyk, duk);
        ds = std::max(ds, std::abs(r.S[k] - s_classic));
        dq = std::max(dq, std::abs(r.Q[k] - q_classic));
      }
      CHECK(ds < 1e-10);
      CHECK(dq < 1e-10);
      CHECK(r.pass);
    }
  }

  TEST_CASE("grid points") {
    auto pts = grid_points({.lo = {0, -1}, .hi = {1, 1}, .counts = {2, 3}});
    REQUIRE(pts.size() == 6);
    CHECK(pts[0] == Vector{0, -1});
    CHECK(pts[1] == Vector{0, 0});
    CHECK(pts[2] == Vector{0, 1});
    CHECK(pts[3] == Vector{1, -1});
    auto mid = grid_points({.lo = {-2}, .hi = {4}, .counts = {1}});
    REQUIRE(mid.size() == 1);
    CHECK(mid[0][0] == 1.0);
    GridSpec rs{.lo = {0, 0}, .hi = {1, 2}, .counts = {0, 0}, .random_samples = 50, .seed = 9};
    auto r1 = grid_points(rs), r2 = grid_points(rs);
    REQUIRE(r1.size() == 50);
    CHECK(r1 == r2);
    for (const auto& p : r1) CHECK((p[0] >= 0 && p[0] <= 1 && p[1] >= 0 && p[1] <= 2));
    rs.seed = 10;
    CHECK(grid_points(rs) != r1);
    CHECK_THROWS_AS((void)grid_points({.lo = {0}, .hi = {1, 2}, .counts = {2}}), DimensionError);
    CHECK_THROWS_AS((void)grid_points({.lo = {1}, .hi = {0}, .counts = {2}}), InvalidArgument);
  }

  TEST_CASE("UC examples") {
    auto pts = grid_points({.lo = {-1, -1}, .hi = {1, 1}, .counts = {3, 3}});
    auto M = numerics::constant_field(Matrix::identity(2));
    auto W = numerics::constant_field(I1());
    Matrix pi = Matrix::from_rows({{1}, {0}});
    auto ok = check_uc(two_state(-1.0), M, pi, W, pts);
    CHECK(ok.pass);
    REQUIRE(ok.conditions.size() == 3);
    CHECK(ok.conditions[0].worst == doctest::Approx(-1.0));
    CHECK(ok.conditions[1].worst == 0.0);
    CHECK(ok.conditions[2].worst == 0.0);

    // M' d(Mf) = +I: largest eigenvalue 1
    auto bad = check_uc(two_state(1.0), M, pi, W, pts);
    CHECK_FALSE(bad.pass);
    CHECK(bad.conditions[0].worst == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(bad.conditions[0].pass);
    CHECK(bad.conditions[1].pass);
    // all points tie, the first one is reported
    CHECK(bad.conditions[0].worst_index == 0);
    CHECK(bad.conditions[0].worst_point == pts[0]);

    CHECK_THROWS_AS((void)check_uc(two_state(-1.0), M, Matrix(2, 1), W, pts), InvalidCertificate);
    CHECK_THROWS_AS((void)check_uc(two_state(-1.0), M, Matrix(1, 1), W, pts), DimensionError);
  }

  TEST_CASE("UC on a cubic scalar system matches the symbolic derivative") {
    auto sys = fixture::scalar([](auto x) { return -x - x * x * x; });
    auto pts = grid_points({.lo = {-2}, .hi = {2}, .counts = {41}});
    auto one = numerics::constant_field(I1());
    auto r = check_uc(sys, one, I1(), one, pts);
    CHECK(r.pass);
    const auto& c = r.conditions[0];
    double err = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) err = std::max(err, std::abs(c.values[k] - (-1.0 - 3.0 * pts[k][0] * pts[k][0])));
    CHECK(err < 1e-13);
    CHECK(c.worst == doctest::Approx(-1.0));
    CHECK(c.worst_point[0] == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("UC with state-dependent M uses the composite Jacobian") {
    // f = -x, M(x) = 1 + x^2: d(Mf)/dx = -1 - 3x^2, margin = -(1 + x^2)(1 + 3x^2)
    auto sys = fixture::scalar([](auto x) { return -x; });
    auto M = StateMatField::generic([](auto x) {
      using T = typename decltype(x)::value_type;
      return MatrixT<T>(1, 1, {1.0 + x[0] * x[0]});
    });
    auto pts = grid_points({.lo = {-1.5}, .hi = {1.5}, .counts = {7}});
    auto r = check_uc(sys, M, I1(), numerics::constant_field(I1()), pts);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      double x = pts[k][0];
      CHECK(r.conditions[0].values[k] == doctest::Approx(-(1 + x * x) * (1 + 3 * x * x)));
      CHECK(r.conditions[1].values[k] == doctest::Approx(x * x));
    }
    CHECK_FALSE(r.pass);
    CHECK(r.conditions[1].worst_point[0] == -1.5);
  }

  TEST_CASE("AP examples") {
    auto pts = grid_points({.lo = {-1, -1}, .hi = {1, 1}, .counts = {3, 3}});
    std::vector<Vector> us{{-1.0}, {0.0}, {2.0}};
    auto M = numerics::constant_field(Matrix::identity(2));
    auto W = numerics::constant_field(I1());
    auto pos = with_throughput(two_state(-1.0), numerics::constant_time_field(I1()));
    auto ok = check_ap(pos, M, W, pts, us);
    CHECK(ok.pass);
    REQUIRE(ok.conditions.size() == 4);
    CHECK(ok.conditions[2].worst == 0.0);
    CHECK(ok.conditions[2].values.size() == pts.size() * us.size());

    auto neg = with_throughput(two_state(-1.0), numerics::constant_time_field(-1.0 * I1()));
    auto bad = check_ap(neg, M, W, pts, us);
    CHECK_FALSE(bad.pass);
    CHECK(bad.conditions[3].worst == doctest::Approx(-1.0));
    CHECK(bad.conditions[0].pass);
    CHECK(bad.conditions[1].pass);
    CHECK(bad.conditions[2].pass);

    CHECK_THROWS_AS((void)check_ap(two_state(-1.0), M, W, pts, us), InvalidCertificate);
    CHECK_THROWS_AS((void)check_uc(pos, M, Matrix::from_rows({{1}, {0}}), W, pts), InvalidCertificate);
  }

  TEST_CASE("AP scalar system with state-dependent throughput") {
    auto sys = with_throughput(fixture::scalar([](auto x) { return -x; }), numerics::MatField::generic([](double, auto x) {
                                 using T = typename decltype(x)::value_type;
                                 return MatrixT<T>(1, 1, {1.0 + x[0] * x[0]});
                               }));
    auto pts = grid_points({.lo = {-2}, .hi = {2}, .counts = {9}});
    std::vector<Vector> us{{1.0}};
    auto one = numerics::constant_field(I1());
    auto r = check_ap(sys, one, one, pts, us);
    CHECK_FALSE(r.pass);
    const auto& c3 = r.conditions[2];
    for (std::size_t k = 0; k < pts.size(); ++k) CHECK(c3.values[k] == doctest::Approx(std::abs(2 * pts[k][0])));
    CHECK(c3.worst == doctest::Approx(4.0));
    CHECK(c3.worst_point[0] == -2.0);
    CHECK(c3.worst_input == Vector{1.0});
    CHECK(r.conditions[3].pass);
  }

  TEST_CASE("certificates are deterministic") {
    auto sys = fixture::scalar([](auto x) { return -x - x * x * x; });
    auto pts = grid_points({.lo = {-2}, .hi = {2}, .counts = {5}, .random_samples = 20, .seed = 3});
    auto one = numerics::constant_field(I1());
    auto a = check_uc(sys, one, I1(), one, pts);
    auto b = check_uc(sys, one, I1(), one, pts);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(a.conditions[c].values == b.conditions[c].values);
      CHECK(a.conditions[c].worst_index == b.conditions[c].worst_index);
    }
  }

  TEST_CASE("a passing UC certificate implies passing audits inside the grid") {
    auto sys = fixture::scalar([](auto x) { return -x - x * x * x; });
    auto one = numerics::constant_field(I1());
    REQUIRE(check_uc(sys, one, I1(), one, grid_points({.lo = {-2}, .hi = {2}, .counts = {81}})).pass);
    numerics::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      double x0 = rng.uniform(-1, 1), d0 = rng.normal(), amp = rng.uniform(0, 0.5);
      SignalVec u{Signal::closure([amp](double t) { return amp * std::sin(t); }, [amp](double t) { return amp * std::cos(t); })};
      SignalVec du{Signal::closure([d0](double t) { return d0 * std::cos(2 * t); })};
      auto traj = systems::simulate_prolonged(sys, std::vector{x0}, std::vector{d0}, u, du, 4.0, {.sample_dt = 0.02});
      for (const auto& x : traj.x) REQUIRE(std::abs(x[0]) <= 2.0);
      auto r = audit(traj, constant_storage(I1()), constant_supply(I1()));
      CHECK(r.pass);
    }
  }

  TEST_CASE("storage axioms hold for random factors and projectors") {
    numerics::Rng rng(21);
    std::mt19937_64 mt(21);
    std::vector<Vector> pts;
    for (int k = 0; k < 30; ++k) pts.push_back({rng.normal(), rng.normal(), rng.normal()});
    for (int trial = 0; trial < 10; ++trial) {
      Matrix m = oracle::random_matrix(3, 3, mt);
      // oblique projector onto span(v1, v2) along w
      Matrix basis = oracle::random_matrix(3, 3, mt);
      Matrix inv = oracle::inverse(basis);
      Matrix d = Matrix::identity(3);
      d(2, 2) = 0.0;
      Matrix p = basis * d * inv;
      auto s = constant_storage(m);
      s.P = numerics::constant_field(p);
      auto rep = check_storage_axioms(s, pts, static_cast<std::uint64_t>(trial));
      CHECK(rep.pass);
      CHECK(rep.vertical_invariance < 1e-10);
      CHECK(rep.projector_idempotence < 1e-10);
      CHECK(rep.homogeneity_k < 1e-12);

      // vertical invariance with the kernel vector itself
      Vector kernel{basis(0, 2), basis(1, 2), basis(2, 2)};
      Vector dx{rng.normal(), rng.normal(), rng.normal()}, shifted = dx;
      double scale = rng.uniform(-10, 10);
      for (std::size_t i = 0; i < 3; ++i) shifted[i] += scale * kernel[i];
      CHECK(storage_eval(s, pts[0], shifted) == doctest::Approx(storage_eval(s, pts[0], dx)).epsilon(1e-9));
    }
    auto s = constant_storage(Matrix::identity(3));
    s.P = numerics::constant_field(0.5 * Matrix::identity(3));
    CHECK_FALSE(check_storage_axioms(s, pts).pass);
  }

  TEST_CASE("Hessian storage") {
    ScalarField m = ScalarField::generic([](auto x) { return 0.5 * x[0] * x[0] + 0.25 * x[0] * x[0] * x[0] * x[0] + x[0] * x[1] + x[1] * x[1]; });
    auto s = hessian_storage(2, m);
    Vector x{0.5, -1.0};
    Matrix hx = s.M.at<double>()(x);
    CHECK(hx(0, 0) == doctest::Approx(1.0 + 3.0 * 0.25));
    CHECK(hx(0, 1) == doctest::Approx(1.0));
    CHECK(hx(1, 1) == doctest::Approx(2.0));
    CHECK(s.M.has<numerics::Ad>());
    std::vector<Vector> pts{{0, 0}, {1, 2}, {-0.5, 0.3}};
    CHECK(check_storage_axioms(s, pts).pass);
    // a factor that is not the Hessian of the declared potential is caught
    auto wrong = constant_storage(Matrix::identity(2));
    wrong.m = m;
    auto rep = check_storage_axioms(wrong, pts);
    CHECK_FALSE(rep.pass);
    CHECK(rep.hessian_residual > 0.1);
  }
}
