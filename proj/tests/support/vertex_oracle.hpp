#pragma once

// Diameter of ker(A) cap B_1 by vertex enumeration. Each vertex is the
// unit-l1 null vector of a column subset with a one-dimensional null space.

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "ripl/ensembles.hpp"

namespace oracle {

inline bool next_subset(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t s = idx.size();
  for (std::size_t i = s; i-- > 0;) {
    if (idx[i] < n - s + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

inline double vertex_diameter(const ripl::MeasurementMatrix& m) {
  const std::size_t n = m.cols(), k = m.rows();
  Eigen::MatrixXd a(k, n);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = m(i, j);
  double best = 0.0;
  for (std::size_t s = 1; s <= std::min(n, k + 1); ++s) {
    std::vector<std::size_t> idx(s);
    for (std::size_t i = 0; i < s; ++i) idx[i] = i;
    do {
      Eigen::MatrixXd sub(k, s);
      for (std::size_t j = 0; j < s; ++j) sub.col(j) = a.col(idx[j]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
      lu.setThreshold(1e-10);
      if (lu.dimensionOfKernel() != 1) continue;
      const Eigen::VectorXd v = lu.kernel().col(0);
      best = std::max(best, v.norm() / v.lpNorm<1>());
    } while (next_subset(idx, n));
  }
  return 2.0 * best;
}

}  // namespace oracle
