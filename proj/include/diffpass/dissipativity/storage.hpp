#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "diffpass/numerics/leveled.hpp"
#include "diffpass/systems/system.hpp"

namespace diffpass::dissipativity {

using numerics::Matrix;
using numerics::MatrixT;
using numerics::ScalarField;
using numerics::StateMatField;
using numerics::Vector;

/// S(x, dx) = 1/2 |M(x) P(x) dx|^2, with P the identity when absent.
///
/// The Finsler function is K = sqrt(2 S); the sandwich c1 K^2 <= 2 S <= c2 K^2
/// is then tight with c1 = c2 = 1.
struct QuadraticDifferentialStorage {
  std::size_t n = 0;
  StateMatField M;
  StateMatField P;  ///< optional horizontal projector
  ScalarField m;    ///< optional potential with M = Hessian(m)
  double c1 = 1.0;
  double c2 = 1.0;

  template <class T>
  T value(std::span<const T> x, std::span<const T> dx) const {
    if (x.size() != n || dx.size() != n)
      throw DimensionError("storage expects state and displacement of length " + std::to_string(n));
    MatrixT<T> mx = M.at<T>()(x);
    if (mx.cols() != n) throw DimensionError("storage factor M has shape " + mx.shape());
    std::vector<T> v(dx.begin(), dx.end());
    if (P) v = P.at<T>()(x) * std::span<const T>(dx);
    std::vector<T> w = mx * v;
    T s(0.0);
    for (const T& c : w) s += c * c;
    return 0.5 * s;
  }
};

/// Storage with M constant.
QuadraticDifferentialStorage constant_storage(const Matrix& m);

/// Storage M(x) = Hessian of a scalar potential m (needs m up to two levels
/// above the level at which M is used).
QuadraticDifferentialStorage hessian_storage(std::size_t n, const ScalarField& m);

double storage_eval(const QuadraticDifferentialStorage& s, std::span<const double> x, std::span<const double> dx);

/// K(x, dx) = sqrt(2 S(x, dx)).
double finsler_k(const QuadraticDifferentialStorage& s, std::span<const double> x, std::span<const double> dx);

struct StorageGradient {
  Vector d_x;   ///< partial S / partial x
  Vector d_dx;  ///< partial S / partial dx
};

StorageGradient storage_gradient(const QuadraticDifferentialStorage& s, std::span<const double> x,
                                 std::span<const double> dx);

/// dS/dt = d_x S . xdot + d_dx S . dxdot, in one dual sweep.
double storage_rate(const QuadraticDifferentialStorage& s, std::span<const double> x, std::span<const double> dx,
                    std::span<const double> xdot, std::span<const double> dxdot);

/// Linear class-K rate alpha(s) = rate * (argument_scale * s).
struct StateStrictness {
  double rate = 0.0;
  double argument_scale = 1.0;
  [[nodiscard]] double operator()(double s) const { return rate * (argument_scale * s); }
  [[nodiscard]] bool active() const { return rate > 0.0; }
};

/// Q = dy' W(x) du - output_gain * dy' W(x) dy.
struct SupplyRate {
  std::size_t q = 0;
  StateMatField W;
  double output_gain = 0.0;
  StateStrictness state_rate;
};

SupplyRate constant_supply(const Matrix& w);

/// Evaluates W(x) and rejects asymmetry beyond 1e-12 (1 + max|W|).
Matrix supply_tensor(const SupplyRate& w, std::span<const double> x);

double supply_eval(const SupplyRate& w, std::span<const double> x, std::span<const double> dy,
                   std::span<const double> du);

struct PassiveSystem {
  systems::DynSystem system;
  QuadraticDifferentialStorage storage;
  SupplyRate supply;
  std::string name;
};

struct AxiomReport {
  double zero_section = 0.0;       ///< max |S(x, 0)|
  double min_value = 0.0;          ///< min S over samples (>= 0 expected)
  double homogeneity_k = 0.0;      ///< max |K(x, l dx) - l K(x, dx)| / (1 + |K|)
  double homogeneity_s = 0.0;      ///< max |S(x, l dx) - l^2 S(x, dx)| / (1 + |S|)
  double projector_idempotence = 0.0;  ///< max |P^2 - P|_F (0 without P)
  double vertical_invariance = 0.0;    ///< max |S(x, dx + v) - S(x, dx)| with P v = 0
  double hessian_residual = 0.0;       ///< max |M - Hess m|_F (0 without m)
  double asymmetry = 0.0;              ///< max |M - M^T|_F when m is given
  bool pass = true;
};

/// Sampled checks of the storage axioms at the given points; deterministic in seed.
AxiomReport check_storage_axioms(const QuadraticDifferentialStorage& s, const std::vector<Vector>& points,
                                 std::uint64_t seed = 0);

}  // namespace diffpass::dissipativity
