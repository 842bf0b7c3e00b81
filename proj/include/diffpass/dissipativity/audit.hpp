#pragma once

#include <vector>

#include "diffpass/dissipativity/storage.hpp"
#include "diffpass/systems/system.hpp"

namespace diffpass::dissipativity {

/// Trajectory-level check of  dS/dt <= -alpha(S) + Q  (pointwise) and of
/// S(t) - S(0) <= int (Q - alpha(S))  (trapezoid quadrature).
struct AuditReport {
  std::vector<double> times;
  std::vector<double> S, Q, dSdt;
  std::vector<double> alpha;           ///< strict dissipation term alpha(S)
  std::vector<double> slack;           ///< Q - alpha(S) - dS/dt
  std::vector<double> integral_slack;  ///< int_0^t (Q - alpha) - (S(t) - S(0))
  double worst_violation = 0.0;        ///< max over t of -slack (negative means strict margin)
  std::size_t worst_index = 0;
  double worst_integral_violation = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Fills traj.S and traj.Q and returns the audit. dS/dt comes from the stored
/// right-hand sides through one dual sweep of S, never from differencing samples.
AuditReport audit(systems::ProlongedTrajectory& traj, const QuadraticDifferentialStorage& storage,
                  const SupplyRate& supply, double tol = 1e-9);

}  // namespace diffpass::dissipativity
