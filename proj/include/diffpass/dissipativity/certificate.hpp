#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffpass/dissipativity/storage.hpp"
#include "diffpass/systems/system.hpp"

namespace diffpass::dissipativity {

/// Box lattice with per-axis counts plus optional seeded uniform samples.
struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<std::size_t> counts;  ///< a count of 1 samples the box midpoint
  std::size_t random_samples = 0;
  std::uint64_t seed = 0;
};

/// Lattice points in lexicographic order (last axis fastest), then the random samples.
std::vector<Vector> grid_points(const GridSpec& spec);

struct ConditionResult {
  std::string name;
  std::string kind;  ///< "nsd_margin", "psd_margin" or "residual"
  std::vector<double> values;  ///< one per evaluated point (or point/input pair)
  double worst = 0.0;          ///< largest margin/residual; smallest for psd_margin
  std::size_t worst_index = 0;
  Vector worst_point;
  Vector worst_input;  ///< input sample for conditions that depend on u
  double tol = 0.0;
  bool pass = false;
};

struct CertificateReport {
  std::string certificate;  ///< "uc" or "ap"
  std::vector<Vector> points;
  std::vector<ConditionResult> conditions;
  bool pass = false;
};

struct CertificateOptions {
  double margin_tol = 1e-9;
  double residual_tol = 1e-8;
  double t = 0.0;  ///< time at which exogenous signals are frozen
};

/// Sufficient conditions for passivity of a throughput-free system with
/// S = 1/2 dx' M' M dx and supply dy' W du:
///   (a) M' d/dx[M f] <= 0,  (b) M g = Pi,  (c) (dh/dx)' W = M' Pi.
CertificateReport check_uc(const systems::DynSystem& sys, const StateMatField& M, const Matrix& Pi,
                           const StateMatField& W, const std::vector<Vector>& points,
                           const CertificateOptions& opts = {});

/// Sufficient conditions for a system with throughput:
///   (1) M' d/dx[M f] <= 0,  (2) (dh/dx)' W = M' M g,
///   (3) [d/dx (i u)]' W = M' d/dx[M g u] for each sampled u,  (4) sym(i' W) >= 0.
/// (3) compares n x q with n x n matrices; both are zero-padded to n x max(n, q).
CertificateReport check_ap(const systems::DynSystem& sys, const StateMatField& M, const StateMatField& W,
                           const std::vector<Vector>& points, const std::vector<Vector>& inputs,
                           const CertificateOptions& opts = {});

}  // namespace diffpass::dissipativity
