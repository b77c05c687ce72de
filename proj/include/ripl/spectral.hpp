#pragma once

// Restricted isometry constants of k x n measurement matrices.
//
// For a support A the normalized Gram matrix is G_A = Gamma_A^T Gamma_A / k.
// The matrix satisfies uup(theta, lambda) when every support with
// |A| <= floor(k / lambda) has 1 - theta <= lambda_min(G_A) and
// lambda_max(G_A) <= 1 + theta.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ripl/ensembles.hpp"
#include "ripl/point_set.hpp"

namespace ripl {

class SupportSet {
 public:
  SupportSet() = default;
  // Throws InvalidArgument unless indices are strictly increasing and < n.
  SupportSet(std::vector<std::size_t> indices, std::size_t n);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t ambient_dim() const { return n_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t n_ = 0;
};

struct EigenPair {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

enum class RipMethod { exact_enumeration, monte_carlo };

struct RipReport {
  std::size_t m = 0;
  // Signed: max over tested supports of 1 - lambda_min and lambda_max - 1.
  double theta_lower = 0.0;
  double theta_upper = 0.0;
  // max(0, theta_lower, theta_upper)
  double theta = 0.0;
  RipMethod method = RipMethod::exact_enumeration;
  std::size_t trials = 0;  // monte carlo only
  std::uint64_t supports_evaluated = 0;
  SupportSet witness_min;
  SupportSet witness_max;
  double lambda_min = 0.0;  // attained on witness_min
  double lambda_max = 0.0;  // attained on witness_max
};

// Extremal eigenvalues of Gamma_A^T Gamma_A / k for a raw matrix.
EigenPair gram_extremal_eigs(const MeasurementMatrix& m, const SupportSet& a);

struct RipExactOptions {
  double budget = 2e6;  // maximal number of supports to enumerate
};

// Enumerates every support of size exactly `sparsity`. Extremes over smaller
// supports are never larger (eigenvalue interlacing), so this is the exact
// constant for all |A| <= sparsity.
RipReport rip_exact(const MeasurementMatrix& m, std::size_t sparsity,
                    const RipExactOptions& options = {});

enum class SupportSampling {
  // Fisher-Yates prefix of a fresh stream per trial.
  uniform,
  // Trial t takes support number (offset + t) mod C(n, m) in lexicographic
  // order, offset derived from the seed; exhaustive once trials >= C(n, m).
  stratified,
};

// Lower bound on the exact constant from `trials` random supports.
RipReport rip_monte_carlo(const MeasurementMatrix& m, std::size_t sparsity,
                          std::size_t trials, std::uint64_t seed,
                          SupportSampling sampling = SupportSampling::uniform);

enum class UupRoute { automatic, exact, monte_carlo };

struct UupOptions {
  UupRoute route = UupRoute::automatic;  // exact when within budget
  double budget = 2e6;
  std::size_t trials = 2000;
  std::uint64_t seed = 0;
};

struct UupResult {
  bool holds = false;
  std::size_t sparsity = 0;  // floor(k / lambda), capped at n
  // floor(k / lambda) == 0: nothing to check, holds vacuously.
  bool degenerate = false;
  // Monte Carlo route: `holds` only means no violation was found.
  bool lower_bound_only = false;
  RipReport report;
};

// Oversampling factor lambda = c1 log(c1' n / (k theta^3)) / theta^2.
// Defaults were fitted on bernoulli n=64, k=32, theta=0.5 (seeds 1000..1099,
// where sparsity 1 always passes and sparsity 2 never does) and frozen.
struct UupConstants {
  double c1 = 2.0;
  double c1_prime = 1.0;
};

double uup_lambda(std::size_t n, std::size_t k, double theta, const UupConstants& c = {});

UupResult check_uup(const MeasurementMatrix& m, double theta, double lambda,
                    const UupOptions& options = {});

struct NetViolation {
  std::size_t index = 0;
  double image_norm = 0.0;  // |Gamma~ x0|
};

struct NetVerification {
  bool all_pass = true;
  bool degenerate = false;  // empty net
  std::vector<NetViolation> violations;
};

// Checks | |Gamma~ x0| - 1 | <= theta / 5 at every point of the net.
// Requires a row-normalized matrix.
NetVerification verify_on_net(const MeasurementMatrix& m, const PointSet& points,
                              double theta);

std::string to_string(RipMethod method);

void to_json(nlohmann::json& j, const SupportSet& s);
void to_json(nlohmann::json& j, const RipReport& r);

}  // namespace ripl
