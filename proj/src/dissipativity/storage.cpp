#include "diffpass/dissipativity/storage.hpp"

#include <algorithm>
#include <cmath>

#include "diffpass/numerics/jacobian.hpp"
#include "diffpass/numerics/random.hpp"

namespace diffpass::dissipativity {

using numerics::Ad;
using numerics::Dual;

namespace {

/// Hessian of m at level T through Dual<Dual<T>>.
template <class T>
MatrixT<T> hessian_at(const ScalarField& m, std::span<const T> x) {
  using D2 = Dual<Dual<T>>;
  const auto& fn = m.at<D2>();
  const std::size_t n = x.size();
  MatrixT<T> out(n, n);
  std::vector<D2> xd(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      for (std::size_t i = 0; i < n; ++i)
        xd[i] = D2(Dual<T>(x[i], T(i == a ? 1.0 : 0.0)), Dual<T>(T(i == b ? 1.0 : 0.0), T(0.0)));
      T v = fn(std::span<const D2>(xd)).deriv.deriv;
      out(a, b) = v;
      out(b, a) = v;
    }
  return out;
}

double max_abs(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

QuadraticDifferentialStorage constant_storage(const Matrix& m) {
  if (!m.square()) throw DimensionError("storage factor must be square, got " + m.shape());
  QuadraticDifferentialStorage s;
  s.n = m.rows();
  s.M = numerics::constant_field(m);
  return s;
}

QuadraticDifferentialStorage hessian_storage(std::size_t n, const ScalarField& m) {
  QuadraticDifferentialStorage s;
  s.n = n;
  s.m = m;
  s.M.set<double>([m](std::span<const double> x) { return hessian_at<double>(m, x); });
  if (m.has<numerics::Ad3>()) s.M.set<Ad>([m](std::span<const Ad> x) { return hessian_at<Ad>(m, x); });
  return s;
}

double storage_eval(const QuadraticDifferentialStorage& s, std::span<const double> x, std::span<const double> dx) {
  return s.value<double>(x, dx);
}

double finsler_k(const QuadraticDifferentialStorage& s, std::span<const double> x, std::span<const double> dx) {
  return std::sqrt(2.0 * std::max(0.0, storage_eval(s, x, dx)));
}

StorageGradient storage_gradient(const QuadraticDifferentialStorage& s, std::span<const double> x,
                                 std::span<const double> dx) {
  const std::size_t n = s.n;
  StorageGradient g{Vector(n), Vector(n)};
  std::vector<Ad> xa = numerics::promote<Ad>(x), da = numerics::promote<Ad>(dx);
  for (std::size_t j = 0; j < n; ++j) {
    xa[j].deriv = 1.0;
    g.d_x[j] = s.value<Ad>(xa, da).deriv;
    xa[j].deriv = 0.0;
    da[j].deriv = 1.0;
    g.d_dx[j] = s.value<Ad>(xa, da).deriv;
    da[j].deriv = 0.0;
  }
  return g;
}

double storage_rate(const QuadraticDifferentialStorage& s, std::span<const double> x, std::span<const double> dx,
                    std::span<const double> xdot, std::span<const double> dxdot) {
  auto xa = numerics::seed<double>(x, xdot);
  auto da = numerics::seed<double>(dx, dxdot);
  return s.value<Ad>(xa, da).deriv;
}

SupplyRate constant_supply(const Matrix& w) {
  if (!w.square()) throw InvalidSupply("supply tensor must be square, got " + w.shape());
  SupplyRate s;
  s.q = w.rows();
  s.W = numerics::constant_field(w);
  return s;
}

Matrix supply_tensor(const SupplyRate& w, std::span<const double> x) {
  Matrix wx = w.W.at<double>()(x);
  if (wx.rows() != w.q || wx.cols() != w.q) throw DimensionError("supply tensor has shape " + wx.shape());
  double scale = 1.0 + max_abs(wx);
  for (std::size_t i = 0; i < w.q; ++i)
    for (std::size_t j = i + 1; j < w.q; ++j)
      if (std::abs(wx(i, j) - wx(j, i)) > 1e-12 * scale)
        throw InvalidSupply("supply tensor is not symmetric: W(" + std::to_string(i) + "," + std::to_string(j) +
                            ") differs from its transpose entry");
  return wx;
}

double supply_eval(const SupplyRate& w, std::span<const double> x, std::span<const double> dy,
                   std::span<const double> du) {
  if (dy.size() != w.q || du.size() != w.q)
    throw DimensionError("supply expects port vectors of length " + std::to_string(w.q));
  Matrix wx = supply_tensor(w, x);
  Vector wdu = wx * du;
  double q = numerics::dot(dy, wdu);
  if (w.output_gain != 0.0) {
    Vector wdy = wx * dy;
    q -= w.output_gain * numerics::dot(dy, wdy);
  }
  return q;
}

AxiomReport check_storage_axioms(const QuadraticDifferentialStorage& s, const std::vector<Vector>& points,
                                 std::uint64_t seed) {
  numerics::Rng rng(seed);
  AxiomReport r;
  r.min_value = std::numeric_limits<double>::infinity();
  const std::size_t n = s.n;
  for (const Vector& x : points) {
    Vector zero(n, 0.0), dx(n), w(n);
    for (auto& v : dx) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    double lam = rng.uniform(0.1, 5.0);
    r.zero_section = std::max(r.zero_section, std::abs(storage_eval(s, x, zero)));
    double sv = storage_eval(s, x, dx);
    r.min_value = std::min(r.min_value, sv);
    Vector ldx = dx;
    for (auto& v : ldx) v *= lam;
    double k = finsler_k(s, x, dx);
    r.homogeneity_k = std::max(r.homogeneity_k, std::abs(finsler_k(s, x, ldx) - lam * k) / (1.0 + k));
    r.homogeneity_s = std::max(r.homogeneity_s, std::abs(storage_eval(s, x, ldx) - lam * lam * sv) / (1.0 + lam * lam * sv));
    if (s.P) {
      Matrix p = s.P.at<double>()(x);
      r.projector_idempotence = std::max(r.projector_idempotence, numerics::frobenius_norm(p * p - p));
      Vector pw = p * w;
      Vector v(n), shifted(n);
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = w[i] - pw[i];
        shifted[i] = dx[i] + v[i];
      }
      r.vertical_invariance = std::max(r.vertical_invariance, std::abs(storage_eval(s, x, shifted) - sv) / (1.0 + sv));
    }
    if (s.m) {
      Matrix mx = s.M.at<double>()(x);
      r.asymmetry = std::max(r.asymmetry, numerics::frobenius_norm(mx - mx.transpose()));
      r.hessian_residual = std::max(r.hessian_residual, numerics::frobenius_norm(mx - numerics::hessian(s.m, x)));
    }
  }
  if (points.empty()) r.min_value = 0.0;
  r.pass = r.zero_section <= 1e-12 && r.min_value >= -1e-12 && r.homogeneity_k <= 1e-10 && r.homogeneity_s <= 1e-10 &&
           r.projector_idempotence <= 1e-10 && r.vertical_invariance <= 1e-10 && r.hessian_residual <= 1e-8 &&
           r.asymmetry <= 1e-8;
  return r;
}

}  // namespace diffpass::dissipativity
