#include "diffpass/incremental/incremental.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diffpass/numerics/linalg.hpp"
#include "diffpass/numerics/random.hpp"

namespace diffpass::incremental {

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) s += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  return s;
}

double sup_norm(const std::vector<Vector>& xs) {
  double m = 0.0;
  for (const auto& x : xs)
    for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

/// rho * int_0^T <dy, dy>_W(x) along one member, co-integrated with the
/// prolonged state so the quadrature error is that of the stepper.
double output_energy(const DynSystem& lifted, const dissipativity::SupplyRate& sup, std::size_t n, const Vector& x0,
                     const Vector& dx0, const SignalVec& u, double t_final, const SimOptions& opts) {
  const std::size_t q = sup.q;
  Vector z0 = x0;
  z0.insert(z0.end(), dx0.begin(), dx0.end());
  z0.push_back(0.0);
  numerics::OdeField field = [&](double t, std::span<const double> z, std::span<double> dz) {
    Vector ut = systems::values(u, t);
    ut.resize(2 * q, 0.0);
    auto zz = z.subspan(0, 2 * n);
    Vector d = lifted.xdot<double>(t, zz, ut);
    Vector y = lifted.output<double>(t, zz, ut);
    std::copy(d.begin(), d.end(), dz.begin());
    std::span<const double> dy(y.data() + q, q);
    numerics::Matrix w = dissipativity::supply_tensor(sup, zz.subspan(0, n));
    dz[2 * n] = sup.output_gain * numerics::dot(dy, w * dy);
  };
  auto sol = numerics::integrate(field, z0, opts.t0, t_final, opts.stepper, opts.sample_dt);
  return sol.states.back().back();
}

}  // namespace

InitialCurve InitialCurve::straight(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("curve endpoints have different lengths");
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  return {[a, d](double s) {
            Vector p = a;
            for (std::size_t i = 0; i < p.size(); ++i) p[i] += s * d[i];
            return p;
          },
          [d](double) { return d; }};
}

HomotopyFamily homotopy_integrate(const DynSystem& sys, const InitialCurve& curve, const SignalVec& u, double t_final,
                                  std::size_t n_s, const SimOptions& opts) {
  if (n_s < 3) throw InvalidArgument("homotopy needs at least 3 s nodes, got " + std::to_string(n_s));
  if (!curve.point || !curve.tangent) throw InvalidArgument("initial curve needs a point map and a tangent map");
  HomotopyFamily fam;
  SignalVec du = systems::zero_signals(sys.q);
  for (std::size_t k = 0; k < n_s; ++k) {
    double s = static_cast<double>(k) / static_cast<double>(n_s - 1);
    fam.s.push_back(s);
    Vector x0 = curve.point(s), d0 = curve.tangent(s);
    try {
      fam.members.push_back(systems::simulate_prolonged(sys, x0, d0, u, du, t_final, opts));
    } catch (const IntegrationError& e) {
      throw IntegrationError("homotopy member s = " + std::to_string(s) + ": " + e.what(), e.last_good_time());
    }
    if (fam.members.back().times != fam.members.front().times)
      throw InvalidArgument("homotopy members ended on different time grids; set a sample interval for adaptive steppers");
  }
  return fam;
}

FinslerFn euclidean_finsler() {
  return [](std::span<const double>, std::span<const double> dx) { return numerics::norm2(dx); };
}

FinslerFn storage_finsler(const dissipativity::QuadraticDifferentialStorage& s) {
  return [s](std::span<const double> x, std::span<const double> dx) { return dissipativity::finsler_k(s, x, dx); };
}

LengthTrace finsler_length(const HomotopyFamily& family, const FinslerFn& k, std::uint64_t seed) {
  if (family.members.empty()) throw InvalidArgument("empty homotopy family");
  const auto& times = family.times();
  const std::size_t m = times.size(), ns = family.members.size();

  numerics::Rng rng(seed);
  LengthTrace out;
  for (int probe = 0; probe < 10; ++probe) {
    const auto& member = family.members[rng.next() % ns];
    std::size_t idx = rng.next() % m;
    const Vector& x = member.x[idx];
    Vector a(x.size()), b(x.size()), mid(x.size()), scaled(x.size());
    double lam = rng.uniform(0.1, 5.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      mid[i] = 0.5 * (a[i] + b[i]);
      scaled[i] = lam * a[i];
    }
    double ka = k(x, a), kl = k(x, scaled);
    if (!(std::abs(kl - lam * ka) <= 1e-8 * (1.0 + std::abs(lam * ka))))
      throw InvalidFinslerStructure("K is not positively homogeneous of degree 1: K(x, " + std::to_string(lam) +
                                    " dx) = " + std::to_string(kl) + " but " + std::to_string(lam) + " K(x, dx) = " +
                                    std::to_string(lam * ka));
    if (k(x, mid) > 0.5 * (ka + k(x, b)) + 1e-12 * (1.0 + ka)) ++out.convexity_violations;
  }

  out.times = times;
  out.L.resize(m);
  std::vector<double> ks(ns);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t j = 0; j < ns; ++j) ks[j] = k(family.members[j].x[t], family.members[j].dx[t]);
    out.L[t] = trapezoid(family.s, ks);
  }
  return out;
}

NonexpansionReport verify_nonexpansion(const HomotopyFamily& family, const FinslerFn& k, double tol_rel,
                                       double tol_abs) {
  NonexpansionReport r;
  r.length = finsler_length(family, k);
  r.tol_rel = tol_rel;
  r.tol_abs = tol_abs;
  const auto& L = r.length.L;
  r.margin = std::numeric_limits<double>::infinity();
  r.pass = true;
  for (std::size_t t = 0; t < L.size(); ++t) {
    double m = L[0] - L[t];
    if (m < r.margin) {
      r.margin = m;
      r.worst_index = t;
    }
    if (L[t] > L[0] * (1.0 + tol_rel) + tol_abs) r.pass = false;
  }
  return r;
}

ConvergenceReport verify_output_convergence(const dissipativity::PassiveSystem& p, const Vector& x0_a,
                                            const Vector& x0_b, const SignalVec& u, double t_final,
                                            const ConvergenceOptions& opts) {
  const auto& sup = p.supply;
  if (!(sup.output_gain > 0.0))
    throw InvalidArgument("output convergence needs an output-strict supply (positive output gain)");
  if (p.storage.n != p.system.n || sup.q != p.system.q) throw DimensionError("storage or supply does not match the system");

  HomotopyFamily fam;
  try {
    fam = homotopy_integrate(p.system, InitialCurve::straight(x0_a, x0_b), u, t_final, opts.n_s, opts.sim);
  } catch (const IntegrationError& e) {
    throw UnboundedTrajectoryError(std::string("trajectory family did not stay bounded: ") + e.what());
  }

  const DynSystem lifted = systems::lift(p.system);
  ConvergenceReport r;
  r.tol = opts.tol;
  r.times = fam.times();
  r.s = fam.s;
  r.min_w_eigenvalue = std::numeric_limits<double>::infinity();
  r.integral_bound_ok = true;
  for (std::size_t j = 0; j < fam.members.size(); ++j) {
    const auto& mem = fam.members[j];
    double norm = sup_norm(mem.x);
    if (!(norm < opts.bound))
      throw UnboundedTrajectoryError("member s = " + std::to_string(fam.s[j]) + " reached sup norm " +
                                     std::to_string(norm) + " (bound " + std::to_string(opts.bound) + ")");
    for (std::size_t t = 0; t < mem.size(); ++t) {
      numerics::Matrix w = dissipativity::supply_tensor(sup, mem.x[t]);
      r.min_w_eigenvalue = std::min(r.min_w_eigenvalue, numerics::sym_eig(w).values.front());
    }
    double e = output_energy(lifted, sup, p.system.n, mem.x[0], mem.dx[0], u, t_final, opts.sim);
    double s0 = dissipativity::storage_eval(p.storage, mem.x[0], mem.dx[0]);
    r.output_energy.push_back(e);
    r.initial_storage.push_back(s0);
    if (e > s0 * (1.0 + opts.integral_rtol) + 1e-12) r.integral_bound_ok = false;
  }
  r.w_flag = r.min_w_eigenvalue < opts.w_floor;

  const auto& ya = fam.members.front().y;
  const auto& yb = fam.members.back().y;
  r.gap.resize(ya.size());
  for (std::size_t t = 0; t < ya.size(); ++t) {
    double s = 0.0;
    for (std::size_t i = 0; i < ya[t].size(); ++i) s += (ya[t][i] - yb[t][i]) * (ya[t][i] - yb[t][i]);
    r.gap[t] = std::sqrt(s);
  }
  double g0 = r.gap.front(), gT = r.gap.back();
  r.ratio = g0 > 0.0 ? gT / g0 : (gT > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  r.pass = r.integral_bound_ok && gT <= opts.tol * g0 + 1e-12;
  return r;
}

FdTrajectory fd_oracle(const DynSystem& sys, const Vector& x0, const Vector& v, double eps, const SignalVec& u,
                       double t_final, const SimOptions& opts) {
  if (!(eps > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (v.size() != x0.size()) throw DimensionError("perturbation direction has the wrong length");
  Vector xp = x0;
  for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += eps * v[i];
  auto base = systems::simulate(sys, x0, u, t_final, opts);
  auto pert = systems::simulate(sys, xp, u, t_final, opts);
  if (base.times != pert.times)
    throw InvalidArgument("perturbed run ended on a different time grid; set a sample interval for adaptive steppers");
  FdTrajectory out;
  out.times = base.times;
  out.dx.resize(base.times.size());
  for (std::size_t k = 0; k < base.times.size(); ++k) {
    out.dx[k].resize(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out.dx[k][i] = (pert.x[k][i] - base.x[k][i]) / eps;
  }
  return out;
}

}  // namespace diffpass::incremental
