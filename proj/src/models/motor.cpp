#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include "diffpass/models/models.hpp"
#include "diffpass/numerics/linalg.hpp"

namespace diffpass::models {

namespace {

using numerics::Ad;
using numerics::MatrixT;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

template <class T>
struct FfTerms {
  std::array<T, 2> phi_r, phi_s, dphi_s, u;
};

// Feedforward terms with omega_r (and its rate) possibly depending on state.
template <class T>
FfTerms<T> ff_terms(const MotorParams& p, double t, const T& wr, const T& wr_dot) {
  const std::array<double, 2> r{p.phi_r_ref_a.value(t), p.phi_r_ref_b.value(t)};
  const std::array<double, 2> dr{p.phi_r_ref_a.deriv(t), p.phi_r_ref_b.deriv(t)};
  const std::array<double, 2> ddr{p.phi_r_ref_a.deriv2(t), p.phi_r_ref_b.deriv2(t)};
  const double ws = p.omega_s.value(t), ws_dot = p.omega_s.deriv(t);
  const T wg = ws - wr;
  const T wg_dot = ws_dot - wr_dot;
  const std::array<double, 2> jr{-r[1], r[0]}, jdr{-dr[1], dr[0]};

  // F_r along the reference and its rate, in one dual sweep
  auto fr = saturation(p.kappa_r, Ad(r[0], dr[0]), Ad(r[1], dr[1]));

  FfTerms<T> out;
  const double cr = p.c_r(), cs = p.c_s();
  for (int k = 0; k < 2; ++k) {
    out.phi_r[k] = T(r[k]);
    out.phi_s[k] = p.L_l * ((dr[k] + wg * jr[k]) / p.R_r + cr * r[k] + fr[k].value);
    out.dphi_s[k] = p.L_l * ((ddr[k] + wg_dot * jr[k] + wg * jdr[k]) / p.R_r + cr * dr[k] + fr[k].deriv);
  }
  auto fs = saturation(p.kappa_s, out.phi_s[0], out.phi_s[1]);
  const std::array<T, 2> js{-out.phi_s[1], out.phi_s[0]};
  for (int k = 0; k < 2; ++k)
    out.u[k] = out.dphi_s[k] + ws * js[k] + p.R_s * (fs[k] + cs * out.phi_s[k]) - (p.R_s / p.L_l) * r[k];
  return out;
}

// Rotor and stator flux rates with rotating-frame speeds wg, ws and stator voltage u.
template <class T>
std::vector<T> flux_rates(const MotorParams& p, std::span<const T> phi, const T& wg, double ws) {
  auto i = motor_currents<T>(p, phi.subspan(0, 4));
  return {wg * phi[1] - p.R_r * i[0], -wg * phi[0] - p.R_r * i[1], ws * phi[3] - p.R_s * i[2],
          -ws * phi[2] - p.R_s * i[3]};
}

Matrix linear_inductance(const MotorParams& p) {
  return Matrix::from_rows({{p.c_r(), -1.0 / p.L_l}, {-1.0 / p.L_l, p.c_s()}});
}

MatrixT<double> stator_input(std::size_t n) {
  Matrix g(n, 2);
  g(2, 0) = 1.0;
  g(3, 1) = 1.0;
  return g;
}

}  // namespace

void MotorParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument(std::string("motor ") + name + " must be positive, got " + fmt(v));
  };
  auto sector = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument(std::string("motor ") + name + " must be >= 0, got " + fmt(v));
  };
  positive(R_r, "R_r");
  positive(R_s, "R_s");
  positive(L_r, "L_r");
  positive(L_s, "L_s");
  positive(L_l, "L_l");
  sector(kappa_r, "kappa_r");
  sector(kappa_s, "kappa_s");
}

PassiveSystem induction_motor_virtual(const MotorParams& params) {
  params.validate();
  auto p = std::make_shared<const MotorParams>(params);

  DynSystem sys;
  sys.n = 4;
  sys.q = 2;
  sys.f = numerics::VecField::generic([p](double t, auto x) {
    using T = typename decltype(x)::value_type;
    const double ws = p->omega_s.value(t);
    return flux_rates<T>(*p, x, T(ws - p->omega_r.value(t)), ws);
  });
  sys.g = numerics::constant_time_field(stator_input(4));
  sys.h = numerics::VecField::generic([](double, auto x) {
    using T = typename decltype(x)::value_type;
    return std::vector<T>{x[2], x[3]};
  });
  sys.exo = {{"omega_r", params.omega_r}, {"omega_s", params.omega_s}};
  sys.state_names = {"phi_r_a", "phi_r_b", "phi_s_a", "phi_s_b"};

  PassiveSystem out;
  out.system = std::move(sys);
  const double sr = 1.0 / std::sqrt(params.R_r), ss = 1.0 / std::sqrt(params.R_s);
  const std::vector<double> diag{sr, sr, ss, ss};
  out.storage = dissipativity::constant_storage(Matrix::diagonal(diag));
  out.supply = dissipativity::constant_supply((1.0 / params.R_s) * Matrix::identity(2));
  out.supply.output_gain = params.R_s * numerics::sym_eig(linear_inductance(params)).values.front();
  out.name = "motor";
  return out;
}

Matrix saturation_jacobian(double kappa, double a, double b) {
  const double n2 = a * a + b * b;
  return Matrix::from_rows({{kappa * (2.0 * a * a + n2), 2.0 * kappa * a * b},
                            {2.0 * kappa * a * b, kappa * (2.0 * b * b + n2)}});
}

MotorDissipation dissipation_matrix(const MotorParams& p, std::span<const double> phi) {
  if (phi.size() != 4) throw DimensionError("motor flux vector must have 4 entries");
  MotorDissipation d;
  d.inductance = Matrix(4, 4);
  d.coupling = Matrix(4, 4);
  Matrix jr = saturation_jacobian(p.kappa_r, phi[0], phi[1]);
  Matrix js = saturation_jacobian(p.kappa_s, phi[2], phi[3]);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      d.inductance(a, b) = jr(a, b);
      d.inductance(a + 2, b + 2) = js(a, b);
    }
    d.inductance(a, a) += 1.0 / p.L_r;
    d.inductance(a + 2, a + 2) += 1.0 / p.L_s;
    d.coupling(a, a) = d.coupling(a + 2, a + 2) = 1.0 / p.L_l;
    d.coupling(a, a + 2) = d.coupling(a + 2, a) = -1.0 / p.L_l;
  }
  d.total = d.inductance + d.coupling;
  return d;
}

DynSystem induction_motor_full(const MotorParams& params, const MechanicalParams& mech, bool feedforward) {
  params.validate();
  if (!(mech.inertia > 0.0)) throw InvalidArgument("motor inertia must be positive");
  auto p = std::make_shared<const MotorParams>(params);

  DynSystem sys;
  sys.n = 5;
  sys.q = 2;
  sys.f = numerics::VecField::generic([p, mech, feedforward](double t, auto x) {
    using T = typename decltype(x)::value_type;
    const double ws = p->omega_s.value(t);
    const T wr = x[4];
    auto i = motor_currents<T>(*p, x.subspan(0, 4));
    const T torque = x[1] * i[0] - x[0] * i[1];
    const T wr_dot = (torque - mech.damping * wr - mech.load) / mech.inertia;
    auto d = flux_rates<T>(*p, x, T(ws - wr), ws);
    if (feedforward) {
      auto ff = ff_terms<T>(*p, t, wr, wr_dot);
      d[2] += ff.u[0];
      d[3] += ff.u[1];
    }
    d.push_back(wr_dot);
    return d;
  });
  sys.g = numerics::constant_time_field(stator_input(5));
  sys.h = numerics::VecField::generic([](double, auto x) {
    using T = typename decltype(x)::value_type;
    return std::vector<T>{x[2], x[3]};
  });
  sys.exo = {{"omega_s", params.omega_s}};
  sys.state_names = {"phi_r_a", "phi_r_b", "phi_s_a", "phi_s_b", "omega_r"};
  return sys;
}

FeedforwardPoint feedforward_at(const MotorParams& p, double t, double omega_r, double omega_r_dot) {
  auto ff = ff_terms<double>(p, t, omega_r, omega_r_dot);
  return {{ff.phi_r[0], ff.phi_r[1]}, {ff.phi_s[0], ff.phi_s[1]}, {ff.dphi_s[0], ff.dphi_s[1]}, {ff.u[0], ff.u[1]}};
}

FeedforwardResidual feedforward_residual(const MotorParams& p, const SignalVec& phi_r, const SignalVec& phi_s,
                                         const SignalVec& u_s, const std::vector<double>& times, double h) {
  if (phi_r.size() != 2 || phi_s.size() != 2 || u_s.size() != 2)
    throw DimensionError("feedforward residual expects two signals per quantity");
  FeedforwardResidual r;
  double worst = -1.0;
  for (double t : times) {
    const double ws = p.omega_s.value(t), wg = ws - p.omega_r.value(t);
    std::array<double, 4> phi{phi_r[0].value(t), phi_r[1].value(t), phi_s[0].value(t), phi_s[1].value(t)};
    std::array<double, 2> dr{phi_r[0].deriv(t), phi_r[1].deriv(t)};
    std::array<double, 2> ds{}, u{u_s[0].value(t), u_s[1].value(t)};
    for (int k = 0; k < 2; ++k) {
      const Signal& s = phi_s[k];
      ds[k] = (-s.value(t + 2 * h) + 8.0 * s.value(t + h) - 8.0 * s.value(t - h) + s.value(t - 2 * h)) / (12.0 * h);
    }
    auto i = motor_currents<double>(p, phi);
    const double rb0 = dr[0] - wg * phi[1] + p.R_r * i[0], rb1 = dr[1] + wg * phi[0] + p.R_r * i[1];
    const double rc0 = ds[0] - ws * phi[3] + p.R_s * i[2] - u[0], rc1 = ds[1] + ws * phi[2] + p.R_s * i[3] - u[1];
    const double rotor = std::hypot(rb0, rb1), stator = std::hypot(rc0, rc1);
    for (double v : {std::hypot(dr[0], dr[1]), std::abs(wg) * std::hypot(phi[0], phi[1]),
                     p.R_r * std::hypot(i[0], i[1]), std::hypot(ds[0], ds[1]),
                     std::abs(ws) * std::hypot(phi[2], phi[3]), p.R_s * std::hypot(i[2], i[3]),
                     std::hypot(u[0], u[1])})
      r.scale = std::max(r.scale, v);
    r.rotor = std::max(r.rotor, rotor);
    r.stator = std::max(r.stator, stator);
    if (std::max(rotor, stator) > worst) {
      worst = std::max(rotor, stator);
      r.worst_time = t;
    }
  }
  return r;
}

Feedforward motor_feedforward(const MotorParams& params, double horizon, std::size_t grid, double tol) {
  params.validate();
  if (!(horizon > 0.0) || grid < 2)
    throw InvalidArgument("feedforward check needs a positive horizon and >= 2 grid points");
  for (const auto* s : {&params.phi_r_ref_a, &params.phi_r_ref_b})
    if (!s->has_deriv2()) throw InvalidArgument("rotor flux reference must carry two derivatives, got " + s->describe());
  for (const auto* s : {&params.phi_r_ref_a, &params.phi_r_ref_b, &params.omega_r, &params.omega_s})
    if (!s->defined_on(0.0, horizon))
      throw InvalidArgument("signal " + s->describe() + " is not defined on [0, " + fmt(horizon) + "]");

  auto p = std::make_shared<const MotorParams>(params);
  auto point = [p](double t) { return feedforward_at(*p, t, p->omega_r.value(t), p->omega_r.deriv(t)); };

  Feedforward ff;
  ff.phi_r_ref = {params.phi_r_ref_a, params.phi_r_ref_b};
  for (std::size_t k = 0; k < 2; ++k) {
    ff.phi_s_ref.push_back(Signal::closure([point, k](double t) { return point(t).phi_s[k]; },
                                           [point, k](double t) { return point(t).dphi_s[k]; }));
    ff.u_s.push_back(Signal::closure([point, k](double t) { return point(t).u_s[k]; }));
  }

  const double h = 1e-3;
  std::vector<double> times(grid);
  for (std::size_t j = 0; j < grid; ++j)
    times[j] = 2 * h + (horizon - 2 * h) * static_cast<double>(j) / static_cast<double>(grid - 1);
  auto r = feedforward_residual(params, ff.phi_r_ref, ff.phi_s_ref, ff.u_s, times, h);
  ff.residual = r.max();
  if (!(ff.residual <= tol * (1.0 + r.scale)))
    throw FeedforwardConstructionError("feedforward does not satisfy the flux equations: residual " +
                                       fmt(ff.residual) + " at t = " + fmt(r.worst_time) + " (rotor " +
                                       fmt(r.rotor) + ", stator " + fmt(r.stator) + ")");
  return ff;
}

}  // namespace diffpass::models
