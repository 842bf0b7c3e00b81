#include "diffpass/systems/system.hpp"

#include "diffpass/numerics/jacobian.hpp"

namespace diffpass::systems {

using numerics::Dual;

namespace {

template <class T>
void split(std::span<const T> z, std::size_t n, std::span<const T>& x, std::span<const T>& dx) {
  if (z.size() != 2 * n) throw DimensionError("lifted state has length " + std::to_string(z.size()) +
                                              ", expected " + std::to_string(2 * n));
  x = z.subspan(0, n);
  dx = z.subspan(n, n);
}

template <class T>
std::vector<T> stack_value_tangent(const std::vector<Dual<T>>& v) {
  std::vector<T> out(2 * v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = v[k].value;
    out[v.size() + k] = v[k].deriv;
  }
  return out;
}

/// [[A, 0], [dA, A]] from a matrix of duals.
template <class T>
MatrixT<T> lower_block(const MatrixT<Dual<T>>& m) {
  const std::size_t r = m.rows(), c = m.cols();
  MatrixT<T> out(2 * r, 2 * c);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < c; ++b) {
      out(a, b) = m(a, b).value;
      out(r + a, c + b) = m(a, b).value;
      out(r + a, b) = m(a, b).deriv;
    }
  return out;
}

template <class T>
bool base_has(const DynSystem& s) {
  using D = Dual<T>;
  return s.f.has<D>() && s.g.has<D>() && s.h.has<D>() && (!s.i || s.i.has<D>());
}

template <class T>
void lift_level(DynSystem& out, const DynSystem& base) {
  using D = Dual<T>;
  const std::size_t n = base.n;
  auto f = base.f.at<D>();
  auto g = base.g.at<D>();
  auto h = base.h.at<D>();
  out.f.set<T>([f, n](double t, std::span<const T> z) {
    std::span<const T> x, dx;
    split(z, n, x, dx);
    auto xd = numerics::seed<T>(x, dx);
    return stack_value_tangent(f(t, std::span<const D>(xd)));
  });
  out.g.set<T>([g, n](double t, std::span<const T> z) {
    std::span<const T> x, dx;
    split(z, n, x, dx);
    auto xd = numerics::seed<T>(x, dx);
    return lower_block(g(t, std::span<const D>(xd)));
  });
  out.h.set<T>([h, n](double t, std::span<const T> z) {
    std::span<const T> x, dx;
    split(z, n, x, dx);
    auto xd = numerics::seed<T>(x, dx);
    return stack_value_tangent(h(t, std::span<const D>(xd)));
  });
  if (base.i) {
    auto i = base.i.at<D>();
    out.i.set<T>([i, n](double t, std::span<const T> z) {
      std::span<const T> x, dx;
      split(z, n, x, dx);
      auto xd = numerics::seed<T>(x, dx);
      return lower_block(i(t, std::span<const D>(xd)));
    });
  }
}

template <class T>
void base_level(DynSystem& out, const DynSystem& lifted, std::size_t n, std::size_t q) {
  auto pad = [n](std::span<const T> x) {
    std::vector<T> z(2 * n, T(0.0));
    for (std::size_t k = 0; k < n; ++k) z[k] = x[k];
    return z;
  };
  auto head = [](std::vector<T> v, std::size_t m) {
    v.resize(m);
    return v;
  };
  auto corner = [](const MatrixT<T>& a, std::size_t r, std::size_t c) {
    MatrixT<T> out(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out(i, j) = a(i, j);
    return out;
  };
  auto f = lifted.f.at<T>();
  auto g = lifted.g.at<T>();
  auto h = lifted.h.at<T>();
  out.f.set<T>([=](double t, std::span<const T> x) { return head(f(t, pad(x)), n); });
  out.g.set<T>([=](double t, std::span<const T> x) { return corner(g(t, pad(x)), n, q); });
  out.h.set<T>([=](double t, std::span<const T> x) { return head(h(t, pad(x)), q); });
  if (lifted.i) {
    auto i = lifted.i.at<T>();
    out.i.set<T>([=](double t, std::span<const T> x) { return corner(i(t, pad(x)), q, q); });
  }
}

void check_signals(const DynSystem& sys, const SignalVec& u, const char* what, double t0, double t1) {
  if (u.size() != sys.q)
    throw DimensionError(std::string(what) + " has " + std::to_string(u.size()) + " channels, system has q=" +
                         std::to_string(sys.q));
  for (std::size_t k = 0; k < u.size(); ++k)
    if (!u[k].defined_on(t0, t1))
      throw InvalidArgument(std::string(what) + " channel " + std::to_string(k) + " is not defined on the horizon");
  for (const auto& [name, s] : sys.exo)
    if (!s.defined_on(t0, t1)) throw InvalidArgument("exogenous signal '" + name + "' is not defined on the horizon");
}

}  // namespace

void DynSystem::validate(std::span<const double> x, double t0) const {
  if (n == 0 || q == 0) throw DimensionError("system dimensions must be positive");
  if (x.size() != n) throw DimensionError("state has length " + std::to_string(x.size()) + ", expected " + std::to_string(n));
  if (!f || !g || !h) throw InvalidArgument("system is missing f, g or h");
  if (f.at<double>()(t0, x).size() != n) throw DimensionError("f has the wrong output length");
  Matrix gx = g.at<double>()(t0, x);
  if (gx.rows() != n || gx.cols() != q) throw DimensionError("g has shape " + gx.shape());
  if (h.at<double>()(t0, x).size() != q) throw DimensionError("h has the wrong output length");
  if (i) {
    Matrix ix = i.at<double>()(t0, x);
    if (ix.rows() != q || ix.cols() != q) throw DimensionError("i has shape " + ix.shape());
  }
}

std::string DynSystem::state_name(std::size_t k) const {
  if (k < state_names.size()) return state_names[k];
  return "x" + std::to_string(k + 1);
}

DynSystem lift(const DynSystem& sys) {
  DynSystem out;
  out.n = 2 * sys.n;
  out.q = 2 * sys.q;
  out.exo = sys.exo;
  for (std::size_t k = 0; k < sys.n; ++k) out.state_names.push_back(sys.state_name(k));
  for (std::size_t k = 0; k < sys.n; ++k) out.state_names.push_back("d" + sys.state_name(k));
  if (!base_has<double>(sys)) throw NumericalError("lift needs the system maps at dual level");
  lift_level<double>(out, sys);
  if (base_has<numerics::Ad>(sys)) lift_level<numerics::Ad>(out, sys);
  if (base_has<numerics::Ad2>(sys)) lift_level<numerics::Ad2>(out, sys);
  return out;
}

DynSystem base_of_lift(const DynSystem& lifted, std::size_t n, std::size_t q) {
  if (lifted.n != 2 * n || lifted.q != 2 * q) throw DimensionError("base_of_lift: dimensions do not match a lift");
  DynSystem out;
  out.n = n;
  out.q = q;
  out.exo = lifted.exo;
  out.state_names.assign(lifted.state_names.begin(), lifted.state_names.begin() + static_cast<long>(std::min(n, lifted.state_names.size())));
  base_level<double>(out, lifted, n, q);
  if (lifted.f.has<numerics::Ad>()) base_level<numerics::Ad>(out, lifted, n, q);
  if (lifted.f.has<numerics::Ad2>()) base_level<numerics::Ad2>(out, lifted, n, q);
  return out;
}

Trajectory simulate(const DynSystem& sys, std::span<const double> x0, const SignalVec& u, double t_final,
                    const SimOptions& opts) {
  sys.validate(x0, opts.t0);
  check_signals(sys, u, "input", opts.t0, t_final);
  numerics::OdeField field = [&](double t, std::span<const double> x, std::span<double> dxdt) {
    Vector ut = values(u, t);
    Vector d = sys.xdot<double>(t, x, ut);
    std::copy(d.begin(), d.end(), dxdt.begin());
  };
  numerics::OdeSolution sol = numerics::integrate(field, x0, opts.t0, t_final, opts.stepper, opts.sample_dt);
  Trajectory tr;
  tr.times = std::move(sol.times);
  tr.x = std::move(sol.states);
  tr.u.reserve(tr.times.size());
  tr.y.reserve(tr.times.size());
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    tr.u.push_back(values(u, tr.times[k]));
    tr.y.push_back(sys.output<double>(tr.times[k], tr.x[k], tr.u[k]));
  }
  return tr;
}

ProlongedTrajectory simulate_prolonged(const DynSystem& sys, std::span<const double> x0, std::span<const double> dx0,
                                       const SignalVec& u, const SignalVec& du, double t_final,
                                       const SimOptions& opts) {
  if (dx0.size() != sys.n) throw DimensionError("dx0 has the wrong length");
  check_signals(sys, du, "displacement input", opts.t0, t_final);
  DynSystem lifted = lift(sys);
  SignalVec uu = u;
  uu.insert(uu.end(), du.begin(), du.end());
  Vector z0(x0.begin(), x0.end());
  z0.insert(z0.end(), dx0.begin(), dx0.end());
  sys.validate(x0, opts.t0);
  check_signals(sys, u, "input", opts.t0, t_final);

  numerics::OdeField field = [&](double t, std::span<const double> z, std::span<double> dzdt) {
    Vector ut = values(uu, t);
    Vector d = lifted.xdot<double>(t, z, ut);
    std::copy(d.begin(), d.end(), dzdt.begin());
  };
  numerics::OdeSolution sol = numerics::integrate(field, z0, opts.t0, t_final, opts.stepper, opts.sample_dt);

  const std::size_t n = sys.n, q = sys.q;
  ProlongedTrajectory tr;
  tr.n = n;
  tr.q = q;
  tr.stepper = sol.stepper;
  tr.tolerance = sol.tolerance;
  tr.times = sol.times;
  const std::size_t m = tr.times.size();
  for (auto* col : {&tr.x, &tr.dx, &tr.u, &tr.du, &tr.y, &tr.dy, &tr.xdot, &tr.dxdot}) col->reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    double t = tr.times[k];
    const Vector& z = sol.states[k];
    Vector ut = values(uu, t);
    Vector zdot = lifted.xdot<double>(t, z, ut);
    Vector yt = lifted.output<double>(t, z, ut);
    tr.x.emplace_back(z.begin(), z.begin() + static_cast<long>(n));
    tr.dx.emplace_back(z.begin() + static_cast<long>(n), z.end());
    tr.u.emplace_back(ut.begin(), ut.begin() + static_cast<long>(q));
    tr.du.emplace_back(ut.begin() + static_cast<long>(q), ut.end());
    tr.y.emplace_back(yt.begin(), yt.begin() + static_cast<long>(q));
    tr.dy.emplace_back(yt.begin() + static_cast<long>(q), yt.end());
    tr.xdot.emplace_back(zdot.begin(), zdot.begin() + static_cast<long>(n));
    tr.dxdot.emplace_back(zdot.begin() + static_cast<long>(n), zdot.end());
  }
  return tr;
}

}  // namespace diffpass::systems
