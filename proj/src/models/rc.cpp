#include <cstdio>
#include <set>

#include "diffpass/models/models.hpp"

namespace diffpass::models {

namespace {

using numerics::Ad3;
using numerics::Dual;
using numerics::MatrixT;
using numerics::primal;

struct CapacitorLaw {
  expr::BoundExpr mu;

  template <class T>
  T value(const T& q) const {
    T vars[2] = {q, q};
    return mu.eval<T>(std::span<const T>(vars, 2));
  }

  template <class T>
  T slope(const T& q) const {
    Dual<T> z(q, T(1.0));
    return value<Dual<T>>(z).deriv;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

PassiveSystem rc_circuit(const RcParams& p) {
  if (!(p.R > 0.0)) throw InvalidArgument("RC resistance must be positive, got " + fmt(p.R));
  if (p.mu.empty()) throw InvalidArgument("RC capacitor law is empty");
  if (!(p.q_lo < p.q_hi)) throw InvalidArgument("RC check interval is empty");
  if (p.check_samples < 2) throw InvalidArgument("RC check needs at least 2 samples");

  auto law = std::make_shared<const CapacitorLaw>(CapacitorLaw{expr::BoundExpr(p.mu, {"q_c", "q"})});
  for (std::size_t k = 0; k < p.check_samples; ++k) {
    double q = p.q_lo + (p.q_hi - p.q_lo) * static_cast<double>(k) / static_cast<double>(p.check_samples - 1);
    double d = law->slope(q);
    if (!(d > 0.0))
      throw ModelDomainError("capacitor law is not increasing: mu'(" + fmt(q) + ") = " + fmt(d) + " on [" +
                             fmt(p.q_lo) + ", " + fmt(p.q_hi) + "]");
  }

  const double r = p.R;
  DynSystem sys = systems::make_system(
      1, 1,
      [law, r](double, auto x) {
        using T = typename decltype(x)::value_type;
        return std::vector<T>{-law->value(x[0]) / r};
      },
      [](double, auto x) {
        using T = typename decltype(x)::value_type;
        return MatrixT<T>::identity(1);
      },
      [law](double, auto x) {
        using T = typename decltype(x)::value_type;
        return std::vector<T>{law->value(x[0])};
      });
  sys.state_names = {"q_c"};

  PassiveSystem out;
  out.system = std::move(sys);
  out.storage = dissipativity::constant_storage(Matrix::identity(1));
  out.supply.q = 1;
  out.supply.W = numerics::StateMatField::generic([law](auto x) {
    using T = typename decltype(x)::value_type;
    if constexpr (std::is_same_v<T, Ad3>) {
      throw NumericalError("RC supply tensor is not available at third differentiation depth");
      return MatrixT<T>(1, 1);
    } else {
      T d = law->slope(x[0]);
      if (!(primal(d) > 0.0))
        throw ModelDomainError("capacitor law is not increasing at q_c = " + fmt(primal(x[0])) +
                               " (mu' = " + fmt(primal(d)) + ")");
      MatrixT<T> w(1, 1);
      w(0, 0) = 1.0 / d;
      return w;
    }
  });
  out.name = "rc";
  return out;
}

double rc_resistor_dissipation(const RcParams& p, double q, double dq) {
  CapacitorLaw law{expr::BoundExpr(p.mu, {"q_c", "q"})};
  double d = law.slope(q);
  if (!(d > 0.0)) throw ModelDomainError("capacitor law is not increasing at q_c = " + fmt(q));
  double di_r = d * dq / p.R;
  return p.R * di_r * di_r / d;
}

}  // namespace diffpass::models
