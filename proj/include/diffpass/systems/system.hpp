#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diffpass/numerics/leveled.hpp"
#include "diffpass/numerics/ode.hpp"
#include "diffpass/systems/signal.hpp"

namespace diffpass::systems {

using numerics::MatField;
using numerics::Matrix;
using numerics::MatrixT;
using numerics::VecField;
using numerics::Vector;

/// Control-affine system  x' = f(t, x) + g(t, x) u,  y = h(t, x) + i(t, x) u.
///
/// Time enters only through exogenous signals captured by the maps; the
/// displacement dynamics treat those signals as frozen coefficients.
struct DynSystem {
  std::size_t n = 0;  ///< state dimension
  std::size_t q = 0;  ///< input = output dimension
  VecField f;
  MatField g;
  VecField h;
  MatField i;  ///< empty means no throughput
  std::map<std::string, Signal> exo;
  std::vector<std::string> state_names;

  [[nodiscard]] bool has_throughput() const { return static_cast<bool>(i); }

  /// Evaluates every map once at (t0, x) and checks shapes.
  void validate(std::span<const double> x, double t0 = 0.0) const;

  template <class T>
  std::vector<T> xdot(double t, std::span<const T> x, std::span<const T> u) const {
    std::vector<T> dx = f.at<T>()(t, x);
    MatrixT<T> gx = g.at<T>()(t, x);
    std::vector<T> gu = gx * u;
    for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += gu[k];
    return dx;
  }

  template <class T>
  std::vector<T> output(double t, std::span<const T> x, std::span<const T> u) const {
    std::vector<T> y = h.at<T>()(t, x);
    if (i) {
      std::vector<T> iu = i.at<T>()(t, x) * u;
      for (std::size_t k = 0; k < y.size(); ++k) y[k] += iu[k];
    }
    return y;
  }

  [[nodiscard]] std::string state_name(std::size_t k) const;
};

/// Builds a DynSystem from generic lambdas (each instantiated at every level).
template <class F, class G, class H>
DynSystem make_system(std::size_t n, std::size_t q, const F& f, const G& g, const H& h) {
  DynSystem s;
  s.n = n;
  s.q = q;
  s.f = VecField::generic(f);
  s.g = MatField::generic(g);
  s.h = VecField::generic(h);
  return s;
}

/// Prolongation to the tangent bundle: state (x, dx), input (u, du),
/// output (y, dy). Available at every level where the base maps are
/// available one level deeper.
DynSystem lift(const DynSystem& sys);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> x, u, y;
};

struct SimOptions {
  numerics::Stepper stepper = numerics::FixedRk4{};
  double sample_dt = 0.0;  ///< 0 records every integrator step
  double t0 = 0.0;
};

Trajectory simulate(const DynSystem& sys, std::span<const double> x0, const SignalVec& u, double t_final,
                    const SimOptions& opts = {});

struct ProlongedTrajectory {
  std::size_t n = 0, q = 0;
  std::vector<double> times;
  std::vector<Vector> x, dx, u, du, y, dy;
  std::vector<Vector> xdot, dxdot;  ///< right-hand sides at each sample
  std::vector<double> S, Q;         ///< filled by audits
  std::string stepper;
  double tolerance = 0.0;

  [[nodiscard]] std::size_t size() const { return times.size(); }
};

ProlongedTrajectory simulate_prolonged(const DynSystem& sys, std::span<const double> x0, std::span<const double> dx0,
                                       const SignalVec& u, const SignalVec& du, double t_final,
                                       const SimOptions& opts = {});

/// Reads the base dynamics (first n states, first q inputs/outputs) out of a
/// lifted system; evaluated on (x, 0) with du = 0.
DynSystem base_of_lift(const DynSystem& lifted, std::size_t n, std::size_t q);

}  // namespace diffpass::systems
