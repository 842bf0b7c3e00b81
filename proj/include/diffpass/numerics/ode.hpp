#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace diffpass::numerics {

/// Classical fourth-order Runge-Kutta on a uniform grid.
struct FixedRk4 {
  double dt = 1e-3;
};

/// Dormand-Prince 5(4) with a combined absolute/relative error test:
/// |err_i| <= tol * (1 + max(|x_i|, |x_i'|)).
struct AdaptiveRk45 {
  double tol = 1e-8;
  double initial_step = 0.0;  ///< 0 picks a step from the field scale
  double min_step = 1e-14;
  double max_step = std::numeric_limits<double>::infinity();
};

using Stepper = std::variant<FixedRk4, AdaptiveRk45>;

std::string stepper_id(const Stepper& stepper);
double stepper_tolerance(const Stepper& stepper);

using OdeField = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

struct OdeSolution {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::string stepper;
  double tolerance = 0.0;  ///< dt for rk4, tol for rk45
};

/// Integrates x' = field(t, x) from t0 to t1.
///
/// With sample_dt == 0 every step is recorded (rk4 uses dt with a shortened
/// final step). With sample_dt > 0 only t0 + k*sample_dt and t1 are recorded;
/// rk4 splits each sample interval into equal steps no longer than dt and
/// rk45 clamps its steps so they land on the samples. Either way two calls with
/// the same stepper and span share a time grid.
OdeSolution integrate(const OdeField& field, std::span<const double> x0, double t0, double t1,
                      const Stepper& stepper, double sample_dt = 0.0);

}  // namespace diffpass::numerics
