#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ripl {

struct JacobiResult {
  std::vector<double> eigenvalues;  // ascending
  int sweeps = 0;
  bool converged = false;
};

// Eigenvalues of a symmetric dim x dim matrix (row-major; only symmetry of the
// input is assumed, the upper triangle is what gets read) by cyclic Jacobi
// rotations. Stops once the off-diagonal Frobenius mass falls below
// 1e-12 times the Frobenius norm, or after 100 sweeps.
JacobiResult jacobi_eigenvalues(std::span<const double> a, std::size_t dim);

}  // namespace ripl
