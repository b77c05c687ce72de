#include "ripl/combinatorics.hpp"

#include <cmath>

#include "ripl/errors.hpp"

namespace ripl {

double binomial(std::size_t n, std::size_t m) {
  if (m > n) return 0.0;
  if (m > n - m) m = n - m;
  double c = 1.0;
  for (std::size_t i = 1; i <= m; ++i) {
    c = c * static_cast<double>(n - m + i) / static_cast<double>(i);
  }
  return std::round(c);
}

bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t m = idx.size();
  if (m == 0) return false;
  std::size_t i = m;
  while (i > 0) {
    --i;
    if (idx[i] < n - m + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::size_t> unrank_combination(std::uint64_t rank, std::size_t n,
                                            std::size_t m) {
  require(m <= n, "unrank_combination: m > n");
  std::vector<std::size_t> out;
  out.reserve(m);
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < m; ++slot) {
    for (std::size_t v = next; v < n; ++v) {
      // Subsets whose slot-th element is v.
      const auto with_v =
          static_cast<std::uint64_t>(binomial(n - v - 1, m - slot - 1));
      if (rank < with_v) {
        out.push_back(v);
        next = v + 1;
        break;
      }
      rank -= with_v;
    }
  }
  require(out.size() == m, "unrank_combination: rank out of range");
  return out;
}

}  // namespace ripl
