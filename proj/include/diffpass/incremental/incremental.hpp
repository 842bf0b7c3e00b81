#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "diffpass/dissipativity/storage.hpp"
#include "diffpass/systems/system.hpp"

namespace diffpass::incremental {

using numerics::Vector;
using systems::DynSystem;
using systems::ProlongedTrajectory;
using systems::SignalVec;
using systems::SimOptions;

/// C1 curve of initial conditions s -> x0(s) on [0, 1].
struct InitialCurve {
  std::function<Vector(double)> point;
  std::function<Vector(double)> tangent;

  static InitialCurve straight(const Vector& a, const Vector& b);
};

/// One prolonged trajectory per s node, all on the same time grid, with du = 0.
struct HomotopyFamily {
  std::vector<double> s;
  std::vector<ProlongedTrajectory> members;

  [[nodiscard]] const std::vector<double>& times() const { return members.front().times; }
};

HomotopyFamily homotopy_integrate(const DynSystem& sys, const InitialCurve& curve, const SignalVec& u, double t_final,
                                  std::size_t n_s = 9, const SimOptions& opts = {});

using FinslerFn = std::function<double(std::span<const double> x, std::span<const double> dx)>;

FinslerFn euclidean_finsler();

/// K = sqrt(2 S) for a quadratic storage.
FinslerFn storage_finsler(const dissipativity::QuadraticDifferentialStorage& s);

struct LengthTrace {
  std::vector<double> times;
  std::vector<double> L;
  std::string rule = "trapezoid";
  std::size_t convexity_violations = 0;  ///< sampled midpoint-convexity failures of K in dx
};

/// L(t) = trapezoid over s of K(x(t, s), dx(t, s)). K is spot-checked for
/// degree-1 homogeneity at 10 seeded samples.
LengthTrace finsler_length(const HomotopyFamily& family, const FinslerFn& k, std::uint64_t seed = 0);

struct NonexpansionReport {
  LengthTrace length;
  double margin = 0.0;  ///< min over t of L(0) - L(t)
  std::size_t worst_index = 0;
  double tol_rel = 1e-6, tol_abs = 1e-9;
  bool pass = false;
};

/// Checks L(t) <= L(0) (1 + tol_rel) + tol_abs at every sample.
NonexpansionReport verify_nonexpansion(const HomotopyFamily& family, const FinslerFn& k, double tol_rel = 1e-6,
                                       double tol_abs = 1e-9);

struct ConvergenceOptions {
  double tol = 1e-3;           ///< required ratio gap(T) / gap(0)
  std::size_t n_s = 9;
  double bound = 1e6;          ///< sup-norm bound on every member state
  double integral_rtol = 1e-6; ///< slack on rho * int <dy, dy>_W <= S(0, s)
  double w_floor = 1e-8;       ///< below this the sampled min eigenvalue of W is flagged
  SimOptions sim;
};

struct ConvergenceReport {
  std::vector<double> times;
  std::vector<double> gap;  ///< |y_a(t) - y_b(t)|
  std::vector<double> s;
  std::vector<double> output_energy;   ///< rho * int_0^T <dy, dy>_W per s node
  std::vector<double> initial_storage; ///< S(x(0, s), dx(0, s)) per s node
  bool integral_bound_ok = false;
  double min_w_eigenvalue = 0.0;
  bool w_flag = false;  ///< sampled W came close to singular
  double ratio = 0.0;   ///< gap(T) / gap(0), 0 when both vanish
  double tol = 0.0;
  bool pass = false;
};

/// Output convergence for an output-strict differentially passive system:
/// both runs share the input u, and the family joining them has du = 0.
ConvergenceReport verify_output_convergence(const dissipativity::PassiveSystem& p, const Vector& x0_a,
                                            const Vector& x0_b, const SignalVec& u, double t_final,
                                            const ConvergenceOptions& opts = {});

struct FdTrajectory {
  std::vector<double> times;
  std::vector<Vector> dx;  ///< (x(t; x0 + eps v) - x(t; x0)) / eps
};

FdTrajectory fd_oracle(const DynSystem& sys, const Vector& x0, const Vector& v, double eps, const SignalVec& u,
                       double t_final, const SimOptions& opts = {});

}  // namespace diffpass::incremental
