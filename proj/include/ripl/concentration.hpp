#pragma once

// Empirical checks that a measurement ensemble preserves norms on average
// and concentrates around them.
//
// Every trial draws a fresh k x n matrix from the ensemble; trial t of a call
// with seed s uses the matrix seeded by (s, spec.seed, t).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ripl/ensembles.hpp"

namespace ripl {

// |A x|^2 / k for the fresh matrix of one trial.
double normalized_square(const EnsembleSpec& spec, std::span<const double> x, std::uint64_t seed,
                         std::uint64_t trial);

// Mean of normalized_square over trials.
double mean_normalized_square(const EnsembleSpec& spec, std::span<const double> x,
                              std::size_t trials, std::uint64_t seed);

// Max over `directions` random unit x of |mean |A x|^2 / k - 1|. The same
// matrices serve every direction.
double expectation_check(const EnsembleSpec& spec, std::size_t directions, std::size_t trials,
                         std::uint64_t seed);

std::vector<double> default_t_grid();  // 0.1, 0.2, ..., 1.0

struct TailReport {
  std::vector<double> t_grid;
  std::vector<double> empirical_tail;     // P(| |A x|^2/k - |x|^2 | >= t |x|^2)
  std::vector<std::size_t> exceedances;   // event counts behind empirical_tail
  std::vector<double> excluded_t;         // grid points with too few events to fit
  double fitted_c0 = 0.0;                 // +inf when no grid point qualifies
  std::size_t k = 0;
  std::size_t trials = 0;
  std::size_t directions = 1;
};

// Grid points need at least this many exceedances to enter the c0 fit.
inline constexpr std::size_t kMinFitEvents = 10;

// Largest c with tail(t) <= exp(-c t^2 k) over the qualifying grid points.
TailReport tail_profile(const EnsembleSpec& spec, std::span<const double> x, std::size_t trials,
                        const std::vector<double>& t_grid, std::uint64_t seed);

// exp(-c0 t^2 k); zero for an unbounded c0.
double bernstein_bound(const TailReport& report, double t);

// Calibration floor for bernstein_psi2_consistency.
double bernstein_c_floor();

// fitted_c0 >= bernstein_c_floor() / alpha_hat^4. An unbounded c0 passes.
bool bernstein_psi2_consistency(double alpha_hat, const TailReport& report, std::size_t k);

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;  // 1.63 / sqrt(trials), the 1% level
  bool pass = false;
  std::size_t trials = 0;
};

// Kolmogorov-Smirnov distance between the sample of k |A x|^2 / |x|^2 and the
// chi-square law with k degrees of freedom. Exact in law for Gaussian entries.
KsResult chi_square_ks(const EnsembleSpec& spec, std::span<const double> x, std::size_t trials,
                       std::uint64_t seed);

// P(|chi2_k / k - 1| >= t)
double chi_square_two_sided_tail(std::size_t k, double t);

void to_json(nlohmann::json& j, const TailReport& report);
// Header t,empirical_tail,bernstein_bound_at_fitted_c0
std::string to_csv(const TailReport& report);

}  // namespace ripl
