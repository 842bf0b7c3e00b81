#pragma once

#include <map>
#include <string>
#include <vector>

#include "diffpass/dissipativity/storage.hpp"
#include "diffpass/expr/expr.hpp"
#include "diffpass/systems/system.hpp"

namespace diffpass::models {

using dissipativity::PassiveSystem;
using numerics::Matrix;
using numerics::Vector;
using systems::DynSystem;
using systems::Signal;
using systems::SignalVec;

// ---------------------------------------------------------------- RC circuit

struct RcParams {
  double R = 1.0;
  expr::Expr mu = expr::parse("q_c");  ///< capacitor law v_c = mu(q_c); `q` is accepted as an alias
  double q_lo = -1.0, q_hi = 1.0;     ///< interval on which d mu / dq must stay positive
  std::size_t check_samples = 201;
};

/// Current-driven nonlinear RC: state q_c, input I, output V = mu(q_c),
///   q_c' = I - mu(q_c) / R.
/// Storage 1/2 dq^2, supply dV W dI with W = 1 / mu'(q_c). The supply carries
/// no output strictness; the exact dissipation is W R di_r^2 with
/// di_r = dV / R (see rc_resistor_dissipation).
PassiveSystem rc_circuit(const RcParams& p);

/// W(q_c) R di_r^2 for a displacement dq at q_c.
double rc_resistor_dissipation(const RcParams& p, double q, double dq);

// ------------------------------------------------------------ induction motor

/// Rotating-frame motor with cubic flux saturation F(phi) = kappa |phi|^2 phi
/// (sector function f(s) = kappa s^2).
struct MotorParams {
  double R_r = 1.0, R_s = 1.0;
  double L_r = 1.0, L_s = 1.0, L_l = 0.2;
  double kappa_r = 0.5, kappa_s = 0.5;
  Signal omega_r = Signal::constant(9.0);
  Signal omega_s = Signal::constant(10.0);
  Signal phi_r_ref_a = Signal::constant(1.0);  ///< rotor flux reference, real part
  Signal phi_r_ref_b = Signal::constant(0.0);  ///< imaginary part

  void validate() const;
  [[nodiscard]] double c_r() const { return 1.0 / L_r + 1.0 / L_l; }
  [[nodiscard]] double c_s() const { return 1.0 / L_s + 1.0 / L_l; }
};

/// Saturation current F(phi) for one flux vector in R^2.
template <class T>
std::vector<T> saturation(double kappa, const T& a, const T& b) {
  T f = kappa * (a * a + b * b);
  return {f * a, f * b};
}

/// Currents (i_r, i_s) in R^4 for fluxes (phi_r, phi_s) in R^4.
template <class T>
std::vector<T> motor_currents(const MotorParams& p, std::span<const T> phi) {
  auto fr = saturation(p.kappa_r, phi[0], phi[1]);
  auto fs = saturation(p.kappa_s, phi[2], phi[3]);
  const double cr = p.c_r(), cs = p.c_s(), ll = 1.0 / p.L_l;
  return {fr[0] + cr * phi[0] - ll * phi[2], fr[1] + cr * phi[1] - ll * phi[3],
          fs[0] + cs * phi[2] - ll * phi[0], fs[1] + cs * phi[3] - ll * phi[1]};
}

/// Virtual system: state (phi_r, phi_s) in R^4 with omega_r, omega_s frozen as
/// exogenous signals; input u_s in R^2; output phi_s. Storage
/// |dphi_r|^2 / (2 R_r) + |dphi_s|^2 / (2 R_s), supply dphi_s . du_s / R_s with
/// output gain R_s * lambda_min of the linear inductance matrix.
PassiveSystem induction_motor_virtual(const MotorParams& p);

struct MotorDissipation {
  Matrix inductance;  ///< blockdiag(dF_r + I / L_r, dF_s + I / L_s)
  Matrix coupling;    ///< (1 / L_l) [[I, -I], [-I, I]]
  Matrix total;
};

/// dV/dt = -dphi' M(phi) dphi + dphi_s . du_s / R_s with M = total.
MotorDissipation dissipation_matrix(const MotorParams& p, std::span<const double> phi);

/// Analytic Jacobian 2 kappa phi phi' + kappa |phi|^2 I of the saturation.
Matrix saturation_jacobian(double kappa, double a, double b);

/// Simple mechanical closure for the full motor: J w' = tau_e - b w - tau_load
/// with tau_e = i_r x phi_r (proportional to slip at steady flux).
struct MechanicalParams {
  double inertia = 1.0;
  double damping = 0.5;
  double load = 0.5;
};

/// Full motor: state (phi_r, phi_s, omega_r) in R^5, omega_s from p, output
/// phi_s. With `feedforward` the stator voltage is the flux feedforward built
/// from the current omega_r plus the external input v; otherwise u_s = v.
DynSystem induction_motor_full(const MotorParams& p, const MechanicalParams& mech, bool feedforward);

struct FeedforwardPoint {
  Vector phi_r, phi_s, dphi_s, u_s;
};

/// Flux feedforward at one instant given omega_r and its derivative:
///   phi_s* = L_l [ (phi_r*' + w_g j phi_r*) / R_r + c_r phi_r* + F_r(phi_r*) ]
///   u_s    = phi_s*' + w_s j phi_s* + R_s (F_s(phi_s*) + c_s phi_s*) - (R_s / L_l) phi_r*
FeedforwardPoint feedforward_at(const MotorParams& p, double t, double omega_r, double omega_r_dot);

struct Feedforward {
  SignalVec phi_r_ref;  ///< 2 signals
  SignalVec phi_s_ref;  ///< 2 signals, first derivative analytic
  SignalVec u_s;        ///< 2 signals
  double residual = 0.0;  ///< constructor check, max over the grid
};

struct FeedforwardResidual {
  double rotor = 0.0;   ///< max |phi_r*' + w_g j phi_r* + R_r i_r|
  double stator = 0.0;  ///< max |phi_s*' + w_s j phi_s* + R_s i_s - u_s|, phi_s*' by central differences
  double scale = 0.0;   ///< largest term magnitude seen
  double worst_time = 0.0;
  [[nodiscard]] double max() const { return rotor > stator ? rotor : stator; }
};

/// Substitutes (phi_r*, phi_s*, u_s) into the rotor and stator flux equations
/// on the given times. phi_s*' uses a 4th-order central difference with step h.
FeedforwardResidual feedforward_residual(const MotorParams& p, const SignalVec& phi_r, const SignalVec& phi_s,
                                         const SignalVec& u_s, const std::vector<double>& times, double h = 1e-3);

/// Builds the feedforward from the signals in p and checks it on
/// [2h, horizon]; a residual above tol (1 + scale) raises
/// FeedforwardConstructionError.
Feedforward motor_feedforward(const MotorParams& p, double horizon = 10.0, std::size_t grid = 201,
                              double tol = 1e-8);

// ----------------------------------------------------------------------- LTI

/// x' = A x + B u, y = C x + D u. An empty D means no throughput.
DynSystem lti(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d = {});

// ------------------------------------------------------------------ registry

/// Canned experiment: a passive system, its input and two initial states.
struct Demo {
  std::string name;
  PassiveSystem system;
  SignalVec u;
  Vector x0_a, x0_b;
  double t_final = 10.0;
  double dt = 1e-3;
  std::map<std::string, std::string> params;  ///< effective parameters, as text
  SignalVec reference;                        ///< target state for regulation (motor only)
  double feedforward_residual = 0.0;          ///< constructor check (motor only)
};

std::vector<std::string> demo_names();

/// Looks up "rc", "motor" or "lti" and applies key=value overrides. Unknown
/// names or keys raise InvalidArgument.
Demo make_demo(const std::string& name, const std::map<std::string, std::string>& overrides = {});

}  // namespace diffpass::models
