#pragma once

#include <span>
#include <vector>

#include "diffpass/numerics/matrix.hpp"

namespace diffpass::numerics {

struct SymmetricEigen {
  std::vector<double> values;  ///< ascending
  Matrix vectors;              ///< column k pairs with values[k]
};

/// Eigen-decomposition of sym(A) by cyclic Jacobi rotations.
SymmetricEigen sym_eig(const Matrix& a);

/// Largest eigenvalue of sym(A); a value <= tol certifies A <= 0 within tol.
double nsd_margin(const Matrix& a);

/// Smallest eigenvalue of sym(A); a value >= -tol certifies A >= 0 within tol.
double psd_margin(const Matrix& a);

inline bool is_nsd(const Matrix& a, double tol) { return nsd_margin(a) <= tol; }

/// Principal square root of a symmetric positive definite matrix.
Matrix sqrt_spd(const Matrix& a);

/// Solves A x = b by Gaussian elimination with partial pivoting.
Vector solve(const Matrix& a, std::span<const double> b);

/// Solves A^T P + P A = -Q for P through the Kronecker-vectorised system.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// sigma_max / sigma_min of a tall matrix (infinity when rank deficient).
double column_condition(const Matrix& a);

}  // namespace diffpass::numerics
