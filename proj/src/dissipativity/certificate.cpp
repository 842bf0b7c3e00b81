#include "diffpass/dissipativity/certificate.hpp"

#include <algorithm>
#include <cmath>

#include "diffpass/numerics/jacobian.hpp"
#include "diffpass/numerics/linalg.hpp"
#include "diffpass/numerics/random.hpp"

namespace diffpass::dissipativity {

using numerics::Ad;

namespace {

ConditionResult make_condition(std::string name, std::string kind, double tol) {
  ConditionResult c;
  c.name = std::move(name);
  c.kind = std::move(kind);
  c.tol = tol;
  return c;
}

void record(ConditionResult& c, double value, const Vector& x, const Vector& u = {}) {
  bool first = c.values.empty();
  c.values.push_back(value);
  // strict comparison keeps the lowest index on ties
  bool worse = c.kind == "psd_margin" ? value < c.worst : value > c.worst;
  if (first || worse) {
    c.worst = value;
    c.worst_index = c.values.size() - 1;
    c.worst_point = x;
    c.worst_input = u;
  }
}

void finish(ConditionResult& c) {
  if (c.values.empty()) {
    c.pass = true;
    return;
  }
  c.pass = c.kind == "psd_margin" ? c.worst >= -c.tol : c.worst <= c.tol;
}

/// Jacobian of x -> M(x) v(x) for a state-dependent vector v.
template <class V>
Matrix jacobian_of_product(const StateMatField& M, const V& v, std::span<const double> x) {
  const auto& m = M.at<Ad>();
  return numerics::jacobian_of<double>(
      [&](std::span<const Ad> xa) {
        numerics::MatrixT<Ad> mx = m(xa);
        std::vector<Ad> vx = v(xa);
        return mx * vx;
      },
      x);
}

Matrix pad_columns(const Matrix& a, std::size_t cols) {
  Matrix out(a.rows(), cols);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

void check_inputs(const systems::DynSystem& sys, const StateMatField& M, const StateMatField& W) {
  if (!M || !W) throw InvalidCertificate("certificate needs both M and W");
  if (!M.has<Ad>()) throw InvalidCertificate("M must be evaluable with dual numbers");
  if (!sys.f.has<Ad>() || !sys.g.has<Ad>() || !sys.h.has<Ad>())
    throw InvalidCertificate("system maps must be evaluable with dual numbers");
}

ConditionResult nsd_condition(const systems::DynSystem& sys, const StateMatField& M,
                              const std::vector<Vector>& points, const CertificateOptions& opts) {
  ConditionResult c = make_condition("M'd[Mf] <= 0", "nsd_margin", opts.margin_tol);
  const auto& f = sys.f.at<Ad>();
  for (const Vector& x : points) {
    Matrix j = jacobian_of_product(M, [&](std::span<const Ad> xa) { return f(opts.t, xa); }, x);
    Matrix mx = M.at<double>()(x);
    record(c, numerics::nsd_margin(mx.transpose() * j), x);
  }
  finish(c);
  return c;
}

}  // namespace

std::vector<Vector> grid_points(const GridSpec& spec) {
  const std::size_t d = spec.lo.size();
  if (spec.hi.size() != d || spec.counts.size() != d)
    throw DimensionError("grid: lo, hi and counts must have the same length");
  std::vector<Vector> out;
  bool lattice = d > 0;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(spec.hi[a] >= spec.lo[a])) throw InvalidArgument("grid: hi must not be below lo on axis " + std::to_string(a));
    if (spec.counts[a] == 0) lattice = false;
  }
  if (lattice) {
    std::vector<std::size_t> idx(d, 0);
    while (true) {
      Vector p(d);
      for (std::size_t a = 0; a < d; ++a) {
        std::size_t c = spec.counts[a];
        p[a] = c == 1 ? 0.5 * (spec.lo[a] + spec.hi[a])
                      : spec.lo[a] + (spec.hi[a] - spec.lo[a]) * static_cast<double>(idx[a]) / static_cast<double>(c - 1);
      }
      out.push_back(std::move(p));
      std::size_t a = d;
      bool carry = true;
      while (carry && a > 0) {
        --a;
        carry = ++idx[a] == spec.counts[a];
        if (carry) idx[a] = 0;
      }
      if (carry) break;
    }
  }
  numerics::Rng rng(spec.seed);
  for (std::size_t k = 0; k < spec.random_samples; ++k) {
    Vector p(d);
    for (std::size_t a = 0; a < d; ++a) p[a] = rng.uniform(spec.lo[a], spec.hi[a]);
    out.push_back(std::move(p));
  }
  return out;
}

CertificateReport check_uc(const systems::DynSystem& sys, const StateMatField& M, const Matrix& Pi,
                           const StateMatField& W, const std::vector<Vector>& points, const CertificateOptions& opts) {
  check_inputs(sys, M, W);
  if (sys.has_throughput()) throw InvalidCertificate("UC conditions apply to systems without throughput");
  if (Pi.rows() != sys.n || Pi.cols() != sys.q)
    throw DimensionError("Pi has shape " + Pi.shape() + ", expected " + std::to_string(sys.n) + "x" + std::to_string(sys.q));
  double cond = numerics::column_condition(Pi);
  if (!(cond <= 1e12)) throw InvalidCertificate("Pi is singular (column condition number " + std::to_string(cond) + ")");

  CertificateReport r;
  r.certificate = "uc";
  r.points = points;
  r.conditions.push_back(nsd_condition(sys, M, points, opts));

  ConditionResult b = make_condition("Mg = Pi", "residual", opts.residual_tol);
  ConditionResult c = make_condition("dh'W = M'Pi", "residual", opts.residual_tol);
  for (const Vector& x : points) {
    Matrix mx = M.at<double>()(x);
    Matrix gx = sys.g.at<double>()(opts.t, x);
    record(b, numerics::frobenius_norm(mx * gx - Pi), x);
    Matrix dh = numerics::jacobian<double>(sys.h, opts.t, std::span<const double>(x));
    Matrix wx = W.at<double>()(x);
    record(c, numerics::frobenius_norm(dh.transpose() * wx - mx.transpose() * Pi), x);
  }
  finish(b);
  finish(c);
  r.conditions.push_back(std::move(b));
  r.conditions.push_back(std::move(c));
  r.pass = std::all_of(r.conditions.begin(), r.conditions.end(), [](const auto& k) { return k.pass; });
  return r;
}

CertificateReport check_ap(const systems::DynSystem& sys, const StateMatField& M, const StateMatField& W,
                           const std::vector<Vector>& points, const std::vector<Vector>& inputs,
                           const CertificateOptions& opts) {
  check_inputs(sys, M, W);
  if (!sys.has_throughput()) throw InvalidCertificate("AP conditions need a throughput term i(x)");
  if (!sys.i.has<Ad>()) throw InvalidCertificate("throughput map must be evaluable with dual numbers");
  for (const Vector& u : inputs)
    if (u.size() != sys.q) throw DimensionError("input sample has the wrong length");

  CertificateReport r;
  r.certificate = "ap";
  r.points = points;
  r.conditions.push_back(nsd_condition(sys, M, points, opts));

  const std::size_t n = sys.n, q = sys.q, width = std::max(n, q);
  const auto& g_ad = sys.g.at<Ad>();
  const auto& i_ad = sys.i.at<Ad>();
  ConditionResult c2 = make_condition("dh'W = M'Mg", "residual", opts.residual_tol);
  ConditionResult c3 = make_condition("[d(iu)]'W = M'd[Mgu]", "residual", opts.residual_tol);
  ConditionResult c4 = make_condition("sym(i'W) >= 0", "psd_margin", opts.margin_tol);
  for (const Vector& x : points) {
    Matrix mx = M.at<double>()(x);
    Matrix gx = sys.g.at<double>()(opts.t, x);
    Matrix wx = W.at<double>()(x);
    Matrix dh = numerics::jacobian<double>(sys.h, opts.t, std::span<const double>(x));
    record(c2, numerics::frobenius_norm(dh.transpose() * wx - mx.transpose() * mx * gx), x);

    for (const Vector& u : inputs) {
      std::vector<Ad> ua = numerics::promote<Ad>(u);
      Matrix diu = numerics::jacobian_of<double>(
          [&](std::span<const Ad> xa) { return i_ad(opts.t, xa) * ua; }, std::span<const double>(x));
      Matrix lhs = diu.transpose() * wx;
      Matrix dmgu = jacobian_of_product(M, [&](std::span<const Ad> xa) { return g_ad(opts.t, xa) * ua; }, x);
      Matrix rhs = mx.transpose() * dmgu;
      record(c3, numerics::frobenius_norm(pad_columns(lhs, width) - pad_columns(rhs, width)), x, u);
    }

    Matrix ix = sys.i.at<double>()(opts.t, x);
    record(c4, numerics::psd_margin(numerics::sym(ix.transpose() * wx)), x);
  }
  finish(c2);
  finish(c3);
  finish(c4);
  r.conditions.push_back(std::move(c2));
  r.conditions.push_back(std::move(c3));
  r.conditions.push_back(std::move(c4));
  r.pass = std::all_of(r.conditions.begin(), r.conditions.end(), [](const auto& k) { return k.pass; });
  return r;
}

}  // namespace diffpass::dissipativity
