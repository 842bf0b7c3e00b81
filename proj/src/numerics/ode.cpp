#include "diffpass/numerics/ode.hpp"

#include <algorithm>
#include <cmath>

#include "diffpass/errors.hpp"

namespace diffpass::numerics {

namespace {

using State = std::vector<double>;

bool finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

class Rk4 {
 public:
  Rk4(const OdeField& field, std::size_t n) : field_(field), k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  void step(double t, double h, State& x) {
    const std::size_t n = x.size();
    field_(t, x, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    field_(t + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    field_(t + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * k3_[i];
    field_(t + h, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

 private:
  const OdeField& field_;
  State k1_, k2_, k3_, k4_, tmp_;
};

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Dopri {
 public:
  Dopri(const OdeField& field, std::size_t n)
      : field_(field), k1_(n), k2_(n), k3_(n), k4_(n), k5_(n), k6_(n), k7_(n), tmp_(n), next_(n) {}

  /// Attempts one step; returns the scaled error norm and leaves the
  /// candidate in next(). k1 must hold field(t, x) on entry (FSAL).
  double attempt(double t, double h, const State& x, double tol) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * a21 * k1_[i];
    field_(t + c2 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    field_(t + c3 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    field_(t + c4 * h, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = x[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    field_(t + c5 * h, tmp_, k5_);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = x[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
    field_(t + h, tmp_, k6_);
    for (std::size_t i = 0; i < n; ++i)
      next_[i] = x[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
    field_(t + h, next_, k7_);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      double sc = tol * (1.0 + std::max(std::abs(x[i]), std::abs(next_[i])));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    return err;
  }

  void accept() { k1_.swap(k7_); }
  State& k1() { return k1_; }
  const State& next() const { return next_; }

 private:
  const OdeField& field_;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, next_;
};

std::vector<double> sample_grid(double t0, double t1, double sample_dt) {
  std::vector<double> grid{t0};
  if (t1 <= t0) return grid;
  auto count = static_cast<std::size_t>(std::floor((t1 - t0) / sample_dt + 1e-9));
  for (std::size_t k = 1; k <= count; ++k) {
    double t = t0 + static_cast<double>(k) * sample_dt;
    if (t1 - t > 1e-12 * std::max(1.0, std::abs(t1))) grid.push_back(t);
  }
  grid.push_back(t1);
  return grid;
}

void check_state(std::span<const double> x, double t_last) {
  if (!finite(x)) throw IntegrationError("non-finite state", t_last);
}

OdeSolution run_rk4(const OdeField& field, State x, double t0, double t1, double dt, double sample_dt) {
  if (!(dt > 0.0)) throw InvalidArgument("rk4 step must be positive");
  OdeSolution sol{{t0}, {x}, "rk4", dt};
  Rk4 rk(field, x.size());
  if (sample_dt > 0.0) {
    auto grid = sample_grid(t0, t1, sample_dt);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      double a = grid[k - 1];
      double span = grid[k] - a;
      auto m = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
      m = std::max<std::size_t>(m, 1);
      double h = span / static_cast<double>(m);
      for (std::size_t j = 0; j < m; ++j) {
        double t = a + static_cast<double>(j) * h;
        rk.step(t, h, x);
        check_state(x, t);
      }
      sol.times.push_back(grid[k]);
      sol.states.push_back(x);
    }
    return sol;
  }
  auto full = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
  double t = t0;
  for (std::size_t k = 1; k <= full; ++k) {
    double t_next = t0 + static_cast<double>(k) * dt;
    if (t_next > t1) t_next = t1;
    rk.step(t, t_next - t, x);
    check_state(x, t);
    t = t_next;
    sol.times.push_back(t);
    sol.states.push_back(x);
  }
  if (t1 - t > 1e-12 * std::max(1.0, std::abs(t1))) {
    rk.step(t, t1 - t, x);
    check_state(x, t);
    sol.times.push_back(t1);
    sol.states.push_back(x);
  } else if (t != t1 && sol.times.size() > 1) {
    sol.times.back() = t1;
  }
  return sol;
}

OdeSolution run_rk45(const OdeField& field, State x, double t0, double t1, const AdaptiveRk45& opts,
                     double sample_dt) {
  if (!(opts.tol > 0.0)) throw InvalidArgument("rk45 tolerance must be positive");
  OdeSolution sol{{t0}, {x}, "rk45", opts.tol};
  if (t1 <= t0) return sol;
  Dopri dp(field, x.size());
  field(t0, x, dp.k1());
  check_state(dp.k1(), t0);

  double h = opts.initial_step;
  if (!(h > 0.0)) {
    double xn = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xn = std::max(xn, std::abs(x[i]));
      fn = std::max(fn, std::abs(dp.k1()[i]));
    }
    h = fn > 0.0 ? 0.01 * std::max(xn, 1.0) / fn : 1e-3;
    h = std::min(h, 0.1 * (t1 - t0));
  }
  h = std::min(h, opts.max_step);

  std::vector<double> grid = sample_dt > 0.0 ? sample_grid(t0, t1, sample_dt) : std::vector<double>{t0, t1};
  std::size_t next_sample = 1;
  double t = t0;
  while (next_sample < grid.size()) {
    double target = grid[next_sample];
    double remaining = target - t;
    bool lands = false;
    double step = h;
    if (step >= remaining * (1.0 - 1e-12)) {
      step = remaining;
      lands = true;
    }
    double min_step = opts.min_step * std::max(1.0, std::abs(t));
    if (step < min_step && !lands) throw IntegrationError("rk45 step size underflow", t);
    double err = dp.attempt(t, step, x, opts.tol);
    if (err <= 1.0) {
      t = lands ? target : t + step;
      x = dp.next();
      dp.accept();
      check_state(x, t);
      check_state(dp.k1(), t);
      if (lands || sample_dt == 0.0) {
        sol.times.push_back(t);
        sol.states.push_back(x);
      }
      if (lands) ++next_sample;
      double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      // a step shortened to hit a sample does not shrink the running estimate
      if (!lands || step >= h) h = std::min(opts.max_step, step * factor);
    } else {
      double factor = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.1;
      h = step * factor;
      if (h < min_step) throw IntegrationError("rk45 step size underflow", t);
    }
  }
  return sol;
}

}  // namespace

std::string stepper_id(const Stepper& stepper) {
  return std::holds_alternative<FixedRk4>(stepper) ? "rk4" : "rk45";
}

double stepper_tolerance(const Stepper& stepper) {
  if (const auto* rk4 = std::get_if<FixedRk4>(&stepper)) return rk4->dt;
  return std::get<AdaptiveRk45>(stepper).tol;
}

OdeSolution integrate(const OdeField& field, std::span<const double> x0, double t0, double t1,
                      const Stepper& stepper, double sample_dt) {
  if (!(t1 >= t0)) throw InvalidArgument("integrate: t_span end precedes start");
  if (sample_dt < 0.0) throw InvalidArgument("integrate: negative sample spacing");
  State x(x0.begin(), x0.end());
  if (x.empty()) throw DimensionError("integrate: empty state");
  check_state(x, t0);
  if (const auto* rk4 = std::get_if<FixedRk4>(&stepper)) return run_rk4(field, std::move(x), t0, t1, rk4->dt, sample_dt);
  return run_rk45(field, std::move(x), t0, t1, std::get<AdaptiveRk45>(stepper), sample_dt);
}

}  // namespace diffpass::numerics
