#include "ripl/jacobi.hpp"

#include <algorithm>
#include <cmath>

#include "ripl/errors.hpp"

namespace ripl {

namespace {
constexpr int kMaxSweeps = 100;
constexpr double kRelativeTolerance = 1e-12;
}  // namespace

JacobiResult jacobi_eigenvalues(std::span<const double> input, std::size_t dim) {
  require(input.size() == dim * dim, "jacobi: matrix size mismatch");
  JacobiResult result;
  if (dim == 0) {
    result.converged = true;
    return result;
  }
  std::vector<double> a(input.begin(), input.end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * dim + j]; };
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) at(j, i) = at(i, j);

  double frob2 = 0.0;
  for (double v : a) frob2 += v * v;
  const double threshold2 = kRelativeTolerance * kRelativeTolerance * frob2;

  auto off_diagonal2 = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j) s += 2.0 * at(i, j) * at(i, j);
    return s;
  };

  for (result.sweeps = 0; result.sweeps < kMaxSweeps; ++result.sweeps) {
    if (off_diagonal2() <= threshold2) {
      result.converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < dim; ++p) {
      for (std::size_t q = p + 1; q < dim; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double app = at(p, p);
        const double aqq = at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < dim; ++r) {
          const double arp = at(r, p);
          const double arq = at(r, q);
          at(r, p) = c * arp - s * arq;
          at(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < dim; ++r) {
          const double apr = at(p, r);
          const double aqr = at(q, r);
          at(p, r) = c * apr - s * aqr;
          at(q, r) = s * apr + c * aqr;
        }
        at(p, q) = 0.0;
        at(q, p) = 0.0;
      }
    }
  }
  if (!result.converged && off_diagonal2() <= threshold2) result.converged = true;

  result.eigenvalues.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) result.eigenvalues[i] = at(i, i);
  std::sort(result.eigenvalues.begin(), result.eigenvalues.end());
  return result;
}

}  // namespace ripl
