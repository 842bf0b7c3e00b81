#include "diffpass/interconnect/interconnect.hpp"

#include <algorithm>
#include <cmath>

#include "diffpass/numerics/jacobian.hpp"
#include "diffpass/numerics/random.hpp"

namespace diffpass::interconnect {

using numerics::Ad;
using numerics::Ad2;
using numerics::Ad3;
using numerics::Dual;
using numerics::MatrixT;

namespace {

template <template <class> class Sig, class Fn, class Avail>
numerics::LeveledFn<Sig> when_available(const Fn& fn, const Avail& avail) {
  numerics::LeveledFn<Sig> out;
  if (avail.template operator()<double>()) out.template set<double>(fn);
  if (avail.template operator()<Ad>()) out.template set<Ad>(fn);
  if (avail.template operator()<Ad2>()) out.template set<Ad2>(fn);
  if (avail.template operator()<Ad3>()) out.template set<Ad3>(fn);
  return out;
}

template <class T>
bool system_has(const DynSystem& s) {
  return s.f.has<T>() && s.g.has<T>() && s.h.has<T>() && (!s.i || s.i.has<T>());
}

template <class T>
std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

template <class T>
std::vector<T> plus(std::vector<T> a, const std::vector<T>& b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  return a;
}

template <class T>
std::vector<T> negate(std::vector<T> a) {
  for (auto& v : a) v = -v;
  return a;
}

template <class T>
MatrixT<T> zeros(std::size_t r, std::size_t c) {
  return MatrixT<T>(r, c);
}

template <class T>
MatrixT<T> eye(std::size_t n) {
  return numerics::promote<T>(Matrix::identity(n));
}

/// Places b into a at (r0, c0).
template <class T>
void put(MatrixT<T>& a, const MatrixT<T>& b, std::size_t r0, std::size_t c0) {
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) a(r0 + i, c0 + j) = b(i, j);
}

/// Closed-loop input as u = a(x) + B(x) v, plus the throughput blocks.
template <class T>
struct LoopTerms {
  std::vector<T> a1, a2;
  MatrixT<T> B;
  MatrixT<T> i1, i2;  // zero blocks for throughput-free sides
};

struct Loop {
  DynSystem s1, s2;
  Coupling coupling;
  VecField k1, k2;

  template <class T>
  LoopTerms<T> terms(double t, std::span<const T> x1, std::span<const T> x2) const {
    const std::size_t q1 = s1.q, q2 = s2.q;
    LoopTerms<T> r;
    r.i1 = s1.i ? s1.i.at<T>()(t, x1) : zeros<T>(q1, q1);
    r.i2 = s2.i ? s2.i.at<T>()(t, x2) : zeros<T>(q2, q2);
    r.B = eye<T>(q1 + q2);
    if (coupling == Coupling::StateFeedback) {
      r.a1 = negate(k2.at<T>()(t, x2));
      r.a2 = k1.at<T>()(t, x1);
      if (r.a1.size() != q1 || r.a2.size() != q2) throw DimensionError("feedback map output does not match the input size");
      return r;
    }
    std::vector<T> h1 = s1.h.at<T>()(t, x1), h2 = s2.h.at<T>()(t, x2);
    if (s1.i) {
      // y2 = h2, u1 = -h2 + v1, u2 = h1 + i1 u1 + v2
      r.a1 = negate(h2);
      r.a2 = plus(h1, r.i1 * r.a1);
      put(r.B, r.i1, q1, 0);
    } else if (s2.i) {
      // y1 = h1, u2 = h1 + v2, u1 = -h2 - i2 u2 + v1
      r.a2 = h1;
      r.a1 = negate(plus(h2, r.i2 * h1));
      put(r.B, MatrixT<T>(-r.i2), 0, q1);
    } else {
      r.a1 = negate(h2);
      r.a2 = h1;
    }
    return r;
  }

  template <class T>
  bool has() const {
    bool ok = system_has<T>(s1) && system_has<T>(s2);
    if (coupling == Coupling::StateFeedback) ok = ok && k1.has<T>() && k2.has<T>();
    return ok;
  }
};

template <class T>
void split(const Loop& l, std::span<const T> z, std::span<const T>& x1, std::span<const T>& x2) {
  if (z.size() != l.s1.n + l.s2.n)
    throw DimensionError("closed-loop state has length " + std::to_string(z.size()) + ", expected " +
                         std::to_string(l.s1.n + l.s2.n));
  x1 = z.subspan(0, l.s1.n);
  x2 = z.subspan(l.s1.n, l.s2.n);
}

DynSystem close_loop(const Loop& loop) {
  auto lp = std::make_shared<const Loop>(loop);
  auto avail = [lp]<class T>() { return lp->has<T>(); };
  DynSystem out;
  out.n = loop.s1.n + loop.s2.n;
  out.q = loop.s1.q + loop.s2.q;
  out.f = when_available<numerics::VecFnSig>(
      [lp](double t, auto z) {
        using T = typename decltype(z)::value_type;
        std::span<const T> x1, x2;
        split(*lp, z, x1, x2);
        auto r = lp->terms<T>(t, x1, x2);
        auto f1 = plus(lp->s1.f.at<T>()(t, x1), lp->s1.g.at<T>()(t, x1) * r.a1);
        auto f2 = plus(lp->s2.f.at<T>()(t, x2), lp->s2.g.at<T>()(t, x2) * r.a2);
        return concat(std::move(f1), f2);
      },
      avail);
  out.g = when_available<numerics::MatFnSig>(
      [lp](double t, auto z) {
        using T = typename decltype(z)::value_type;
        std::span<const T> x1, x2;
        split(*lp, z, x1, x2);
        auto r = lp->terms<T>(t, x1, x2);
        return numerics::block_diagonal(lp->s1.g.at<T>()(t, x1), lp->s2.g.at<T>()(t, x2)) * r.B;
      },
      avail);
  out.h = when_available<numerics::VecFnSig>(
      [lp](double t, auto z) {
        using T = typename decltype(z)::value_type;
        std::span<const T> x1, x2;
        split(*lp, z, x1, x2);
        auto r = lp->terms<T>(t, x1, x2);
        auto y1 = lp->s1.h.at<T>()(t, x1);
        auto y2 = lp->s2.h.at<T>()(t, x2);
        if (lp->s1.i) y1 = plus(y1, r.i1 * r.a1);
        if (lp->s2.i) y2 = plus(y2, r.i2 * r.a2);
        return concat(std::move(y1), y2);
      },
      avail);
  if (loop.s1.i || loop.s2.i)
    out.i = when_available<numerics::MatFnSig>(
        [lp](double t, auto z) {
          using T = typename decltype(z)::value_type;
          std::span<const T> x1, x2;
          split(*lp, z, x1, x2);
          auto r = lp->terms<T>(t, x1, x2);
          return numerics::block_diagonal(r.i1, r.i2) * r.B;
        },
        avail);
  out.exo = loop.s1.exo;
  for (const auto& [k, v] : loop.s2.exo) out.exo.emplace(k, v);
  for (std::size_t k = 0; k < loop.s1.n; ++k) out.state_names.push_back(loop.s1.state_name(k) + "_1");
  for (std::size_t k = 0; k < loop.s2.n; ++k) out.state_names.push_back(loop.s2.state_name(k) + "_2");
  return out;
}

void check_pair(const PassiveSystem& s1, const PassiveSystem& s2) {
  if (s1.system.q != s2.system.q)
    throw DimensionError("interconnected systems need equal port sizes, got " + std::to_string(s1.system.q) + " and " +
                         std::to_string(s2.system.q));
  if (s1.storage.n != s1.system.n || s2.storage.n != s2.system.n)
    throw DimensionError("storage dimension does not match its system");
  if (s1.supply.q != s1.system.q || s2.supply.q != s2.system.q)
    throw DimensionError("supply dimension does not match its system");
}

InterconnectedSystem assemble(const PassiveSystem& s1, const PassiveSystem& s2, Loop loop) {
  InterconnectedSystem out;
  out.first = s1;
  out.second = s2;
  out.coupling = loop.coupling;
  out.k1 = loop.k1;
  out.k2 = loop.k2;
  out.closed = close_loop(loop);
  out.storage = composite_storage(s1.storage, s2.storage);
  out.supply = composite_supply(s1.supply, s1.system.n, s2.supply, s2.system.n);
  return out;
}

Vector diagonal_point(const Vector& lo, const Vector& hi, std::size_t k, std::size_t count) {
  Vector p(lo.size());
  double s = count > 1 ? static_cast<double>(k) / static_cast<double>(count - 1) : 0.5;
  for (std::size_t a = 0; a < lo.size(); ++a) p[a] = lo[a] + (hi[a] - lo[a]) * s;
  return p;
}

}  // namespace

PassiveSystem InterconnectedSystem::as_passive() const {
  std::string name = first.name + (coupling == Coupling::OutputFeedback ? " <-> " : " <=> ") + second.name;
  return {closed, storage, supply, name};
}

InterconnectedSystem output_feedback(const PassiveSystem& s1, const PassiveSystem& s2) {
  check_pair(s1, s2);
  if (s1.system.has_throughput() && s2.system.has_throughput())
    throw AlgebraicLoopError("both systems have throughput; the output feedback loop is algebraic");
  return assemble(s1, s2, Loop{s1.system, s2.system, Coupling::OutputFeedback, {}, {}});
}

InterconnectedSystem state_feedback(const PassiveSystem& s1, const PassiveSystem& s2, const VecField& k1,
                                    const VecField& k2) {
  check_pair(s1, s2);
  if (!k1 || !k2) throw InvalidArgument("state feedback needs both k1 and k2");
  return assemble(s1, s2, Loop{s1.system, s2.system, Coupling::StateFeedback, k1, k2});
}

StateStrictness composite_rate(const StateStrictness& a1, const StateStrictness& a2) {
  double r1 = a1.rate * a1.argument_scale, r2 = a2.rate * a2.argument_scale;
  return {std::min(r1, r2), 0.5};
}

QuadraticDifferentialStorage composite_storage(const QuadraticDifferentialStorage& s1,
                                               const QuadraticDifferentialStorage& s2) {
  QuadraticDifferentialStorage out;
  const std::size_t n1 = s1.n, n2 = s2.n;
  out.n = n1 + n2;
  auto a = std::make_shared<const QuadraticDifferentialStorage>(s1);
  auto b = std::make_shared<const QuadraticDifferentialStorage>(s2);
  auto blocks = [n1, n2](const StateMatField& f1, const StateMatField& f2, bool identity_default) {
    return when_available<numerics::StateMatSig>(
        [f1, f2, n1, n2, identity_default](auto z) {
          using T = typename decltype(z)::value_type;
          if (z.size() != n1 + n2) throw DimensionError("composite storage state has the wrong length");
          auto x1 = z.subspan(0, n1), x2 = z.subspan(n1, n2);
          MatrixT<T> m1 = f1 || !identity_default ? f1.template at<T>()(x1) : eye<T>(n1);
          MatrixT<T> m2 = f2 || !identity_default ? f2.template at<T>()(x2) : eye<T>(n2);
          return numerics::block_diagonal(m1, m2);
        },
        [f1, f2, identity_default]<class T>() {
          bool h1 = f1.template has<T>() || (identity_default && !f1);
          bool h2 = f2.template has<T>() || (identity_default && !f2);
          return h1 && h2;
        });
  };
  out.M = blocks(a->M, b->M, false);
  if (s1.P || s2.P) out.P = blocks(a->P, b->P, true);
  if (s1.m && s2.m) {
    auto m1 = s1.m, m2 = s2.m;
    out.m = when_available<numerics::ScalarFieldSig>(
        [m1, m2, n1, n2](auto z) {
          using T = typename decltype(z)::value_type;
          return m1.template at<T>()(z.subspan(0, n1)) + m2.template at<T>()(z.subspan(n1, n2));
        },
        [m1, m2]<class T>() { return m1.template has<T>() && m2.template has<T>(); });
  }
  out.c1 = std::min(s1.c1, s2.c1);
  out.c2 = std::max(s1.c2, s2.c2);
  return out;
}

SupplyRate composite_supply(const SupplyRate& w1, std::size_t n1, const SupplyRate& w2, std::size_t n2) {
  SupplyRate out;
  out.q = w1.q + w2.q;
  auto f1 = w1.W, f2 = w2.W;
  out.W = when_available<numerics::StateMatSig>(
      [f1, f2, n1, n2](auto z) {
        using T = typename decltype(z)::value_type;
        if (z.size() != n1 + n2) throw DimensionError("composite supply state has the wrong length");
        return numerics::block_diagonal(f1.template at<T>()(z.subspan(0, n1)), f2.template at<T>()(z.subspan(n1, n2)));
      },
      [f1, f2]<class T>() { return f1.template has<T>() && f2.template has<T>(); });
  // valid lower bound on the output penalty when both tensors are positive semidefinite
  out.output_gain = std::min(w1.output_gain, w2.output_gain);
  out.state_rate = composite_rate(w1.state_rate, w2.state_rate);
  return out;
}

std::vector<SamplePair> equalization_samples(const Vector& lo1, const Vector& hi1, const Vector& lo2,
                                             const Vector& hi2, std::size_t random_pairs, std::uint64_t seed) {
  if (lo1.size() != hi1.size() || lo2.size() != hi2.size())
    throw DimensionError("sample boxes need matching lo and hi");
  constexpr std::size_t lattice = 10;
  std::vector<SamplePair> out;
  for (std::size_t j = 0; j < lattice; ++j)
    for (std::size_t k = 0; k < lattice; ++k)
      out.emplace_back(diagonal_point(lo1, hi1, j, lattice), diagonal_point(lo2, hi2, k, lattice));
  numerics::Rng rng(seed);
  for (std::size_t r = 0; r < random_pairs; ++r) {
    Vector a(lo1.size()), b(lo2.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo1[i], hi1[i]);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform(lo2[i], hi2[i]);
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

EqualizationReport check_equalization(const DynSystem& s1, const DynSystem& s2, const VecField& k1,
                                      const VecField& k2, const StateMatField& w1, const StateMatField& w2,
                                      const std::vector<SamplePair>& samples, double tol) {
  if (s1.has_throughput() || s2.has_throughput())
    throw InvalidArgument("equalization check needs throughput-free outputs");
  EqualizationReport r;
  r.samples = samples;
  r.tol = tol;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& [x1, x2] = samples[s];
    if (x1.size() != s1.n || x2.size() != s2.n) throw DimensionError("equalization sample has the wrong state size");
    Matrix dh1 = numerics::jacobian<double>(s1.h, 0.0, std::span<const double>(x1));
    Matrix dh2 = numerics::jacobian<double>(s2.h, 0.0, std::span<const double>(x2));
    Matrix dk1 = numerics::jacobian<double>(k1, 0.0, std::span<const double>(x1));
    Matrix dk2 = numerics::jacobian<double>(k2, 0.0, std::span<const double>(x2));
    Matrix lhs = dh1.transpose() * w1.at<double>()(x1) * dk2;                // n1 x n2
    Matrix rhs = (dh2.transpose() * w2.at<double>()(x2) * dk1).transpose();  // n1 x n2
    double worst = 0.0;
    std::size_t wa = 0, wb = 0;
    for (std::size_t a = 0; a < s1.n; ++a)
      for (std::size_t b = 0; b < s2.n; ++b) {
        double v = std::abs(lhs(a, b) - rhs(a, b));
        if (v > worst) {
          worst = v;
          wa = a;
          wb = b;
        }
      }
    r.residuals.push_back(worst);
    if (s == 0 || worst > r.max_residual) {
      r.max_residual = worst;
      r.worst_sample = s;
      r.worst_a = wa;
      r.worst_b = wb;
    }
  }
  r.pass = r.max_residual <= tol;
  return r;
}

VecField build_equalizing_feedback(const ScalarField& m, const Matrix& pi) {
  return when_available<numerics::VecFnSig>(
      [m, pi](double, auto x) {
        using T = typename decltype(x)::value_type;
        if (x.size() != pi.rows())
          throw DimensionError("feedback gain Pi has " + std::to_string(pi.rows()) + " rows for a state of length " +
                               std::to_string(x.size()));
        if constexpr (std::is_same_v<T, Ad3>) {
          throw NumericalError("equalizing feedback is not available at this differentiation depth");
          return std::vector<T>{};
        } else {
          return numerics::promote<T>(pi.transpose()) * numerics::gradient<T>(m, x);
        }
      },
      [m]<class T>() {
        if constexpr (std::is_same_v<T, Ad3>)
          return false;
        else
          return m.template has<Dual<T>>();
      });
}

double equalizing_feedback_residual(const VecField& k, const ScalarField& m, const Matrix& pi,
                                    const std::vector<Vector>& points) {
  double worst = 0.0;
  for (const Vector& x : points) {
    Matrix dk = numerics::jacobian<double>(k, 0.0, std::span<const double>(x));
    worst = std::max(worst, numerics::frobenius_norm(dk - pi.transpose() * numerics::hessian(m, x)));
  }
  return worst;
}

}  // namespace diffpass::interconnect
