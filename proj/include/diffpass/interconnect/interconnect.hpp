#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "diffpass/dissipativity/storage.hpp"
#include "diffpass/systems/system.hpp"

namespace diffpass::interconnect {

using dissipativity::PassiveSystem;
using dissipativity::QuadraticDifferentialStorage;
using dissipativity::StateStrictness;
using dissipativity::SupplyRate;
using numerics::Matrix;
using numerics::ScalarField;
using numerics::StateMatField;
using numerics::VecField;
using numerics::Vector;
using systems::DynSystem;

enum class Coupling { OutputFeedback, StateFeedback };

/// Closed loop of two systems. State (x1, x2), input (v1, v2), output (y1, y2).
struct InterconnectedSystem {
  PassiveSystem first, second;
  Coupling coupling = Coupling::OutputFeedback;
  VecField k1, k2;  ///< state feedback maps (x1 -> u2 side, x2 -> u1 side)
  DynSystem closed;
  QuadraticDifferentialStorage storage;  ///< S1(x1, dx1) + S2(x2, dx2)
  SupplyRate supply;                     ///< <dy1, dv1>_W1(x1) + <dy2, dv2>_W2(x2)

  /// Closed loop with its composite storage and supply, ready for audits.
  [[nodiscard]] PassiveSystem as_passive() const;
};

/// u1 = -y2 + v1, u2 = y1 + v2. At most one side may have throughput.
InterconnectedSystem output_feedback(const PassiveSystem& s1, const PassiveSystem& s2);

/// u1 = -k2(x2) + v1, u2 = k1(x1) + v2. Cross terms are not assumed to cancel;
/// run check_equalization to confirm they do.
InterconnectedSystem state_feedback(const PassiveSystem& s1, const PassiveSystem& s2, const VecField& k1,
                                    const VecField& k2);

/// Rate of the closed loop: alpha(s) = min(alpha1, alpha2)(s / 2).
StateStrictness composite_rate(const StateStrictness& a1, const StateStrictness& a2);

/// Block-diagonal S1 + S2 on the product state.
QuadraticDifferentialStorage composite_storage(const QuadraticDifferentialStorage& s1,
                                               const QuadraticDifferentialStorage& s2);

/// Block-diagonal W1(x1) + W2(x2); output gain is the smaller of the two.
SupplyRate composite_supply(const SupplyRate& w1, std::size_t n1, const SupplyRate& w2, std::size_t n2);

using SamplePair = std::pair<Vector, Vector>;

/// 10 points on the diagonal of each box, all pairs of them, then
/// `random_pairs` seeded uniform pairs.
std::vector<SamplePair> equalization_samples(const Vector& lo1, const Vector& hi1, const Vector& lo2,
                                             const Vector& hi2, std::size_t random_pairs = 100,
                                             std::uint64_t seed = 0);

struct EqualizationReport {
  std::vector<SamplePair> samples;
  std::vector<double> residuals;  ///< max over basis pairs, one per sample
  double max_residual = 0.0;
  std::size_t worst_sample = 0;
  std::size_t worst_a = 0, worst_b = 0;  ///< basis directions e_a in x1, e_b in x2
  double tol = 0.0;
  bool pass = false;
};

/// Max over samples and basis pairs of
///   |(dh1 e_a)' W1(x1) (dk2 e_b) - (dh2 e_b)' W2(x2) (dk1 e_a)|.
EqualizationReport check_equalization(const DynSystem& s1, const DynSystem& s2, const VecField& k1,
                                      const VecField& k2, const StateMatField& w1, const StateMatField& w2,
                                      const std::vector<SamplePair>& samples, double tol = 1e-8);

/// k(x) = Pi' grad m(x), so that dk = Pi' Hess m.
VecField build_equalizing_feedback(const ScalarField& m, const Matrix& pi);

/// max_x |dk(x) - Pi' Hess m(x)|_F over the given points.
double equalizing_feedback_residual(const VecField& k, const ScalarField& m, const Matrix& pi,
                                    const std::vector<Vector>& points);

}  // namespace diffpass::interconnect
