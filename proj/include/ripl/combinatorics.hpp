#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ripl {

// C(n, m) in floating point; exact for the sizes that matter to budgets and
// large values saturate gracefully instead of overflowing.
double binomial(std::size_t n, std::size_t m);

// Advance `idx` (strictly increasing, values < n) to the next m-subset in
// lexicographic order. Returns false after the last subset.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n);

// The `rank`-th m-subset of {0..n-1} in lexicographic order.
std::vector<std::size_t> unrank_combination(std::uint64_t rank, std::size_t n,
                                            std::size_t m);

}  // namespace ripl
