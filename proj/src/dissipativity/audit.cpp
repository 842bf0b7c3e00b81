#include "diffpass/dissipativity/audit.hpp"

#include <cmath>
#include <limits>

namespace diffpass::dissipativity {

AuditReport audit(systems::ProlongedTrajectory& traj, const QuadraticDifferentialStorage& storage,
                  const SupplyRate& supply, double tol) {
  const std::size_t m = traj.times.size();
  if (m == 0) throw InvalidArgument("audit: trajectory is empty");
  for (const auto* col : {&traj.x, &traj.dx, &traj.u, &traj.du, &traj.y, &traj.dy, &traj.xdot, &traj.dxdot})
    if (col->size() != m) throw InvalidArgument("audit: trajectory column length differs from the time grid");
  if (storage.n != traj.n) throw DimensionError("audit: storage dimension does not match the trajectory state");
  if (supply.q != traj.q) throw DimensionError("audit: supply dimension does not match the trajectory ports");

  AuditReport r;
  r.tol = tol;
  r.times = traj.times;
  r.S.resize(m);
  r.Q.resize(m);
  r.dSdt.resize(m);
  r.alpha.resize(m);
  r.slack.resize(m);
  r.integral_slack.resize(m);
  r.worst_violation = -std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < m; ++k) {
    r.S[k] = storage_eval(storage, traj.x[k], traj.dx[k]);
    r.Q[k] = supply_eval(supply, traj.x[k], traj.dy[k], traj.du[k]);
    if (!std::isfinite(r.Q[k]))
      throw SupplyIntegrabilityError("supply is not finite at t = " + std::to_string(traj.times[k]));
    r.dSdt[k] = storage_rate(storage, traj.x[k], traj.dx[k], traj.xdot[k], traj.dxdot[k]);
    r.alpha[k] = supply.state_rate(r.S[k]);
    r.slack[k] = r.Q[k] - r.alpha[k] - r.dSdt[k];
    if (-r.slack[k] > r.worst_violation) {
      r.worst_violation = -r.slack[k];
      r.worst_index = k;
    }
  }

  double integral = 0.0;
  r.worst_integral_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    if (k > 0) {
      double h = traj.times[k] - traj.times[k - 1];
      integral += 0.5 * h * ((r.Q[k - 1] - r.alpha[k - 1]) + (r.Q[k] - r.alpha[k]));
    }
    r.integral_slack[k] = integral - (r.S[k] - r.S[0]);
    r.worst_integral_violation = std::max(r.worst_integral_violation, -r.integral_slack[k]);
  }

  traj.S = r.S;
  traj.Q = r.Q;
  r.pass = r.worst_violation <= tol;
  return r;
}

}  // namespace diffpass::dissipativity
