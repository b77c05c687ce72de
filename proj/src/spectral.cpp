#include "ripl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ripl/combinatorics.hpp"
#include "ripl/errors.hpp"
#include "ripl/jacobi.hpp"
#include "ripl/kernels.hpp"
#include "ripl/parallel.hpp"
#include "ripl/rng.hpp"

namespace ripl {

namespace {

constexpr std::uint64_t kStratifiedOffsetTag = 0x5354524154494659ULL;

// Entries of Gamma^T Gamma / k, either precomputed or on demand.
class GramSource {
 public:
  GramSource(const MeasurementMatrix& m, bool precompute)
      : m_(m), n_(m.cols()), inv_k_(1.0 / static_cast<double>(m.rows())) {
    if (!precompute) return;
    full_.resize(n_ * n_);
    parallel_for(n_, [&](std::size_t i) {
      for (std::size_t j = i; j < n_; ++j) {
        const double g = kernels::dot(m_.column(i), m_.column(j)) * inv_k_;
        full_[i * n_ + j] = g;
        full_[j * n_ + i] = g;
      }
    });
  }

  double operator()(std::size_t i, std::size_t j) const {
    if (!full_.empty()) return full_[i * n_ + j];
    return kernels::dot(m_.column(i), m_.column(j)) * inv_k_;
  }

  // Fills the |support| x |support| principal submatrix (upper triangle and
  // diagonal; jacobi mirrors it).
  void principal(const std::vector<std::size_t>& support, std::vector<double>& out) const {
    const std::size_t s = support.size();
    out.assign(s * s, 0.0);
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = a; b < s; ++b) out[a * s + b] = (*this)(support[a], support[b]);
  }

 private:
  const MeasurementMatrix& m_;
  std::size_t n_;
  double inv_k_;
  std::vector<double> full_;
};

EigenPair extremes(const GramSource& gram, const std::vector<std::size_t>& support,
                   std::vector<double>& scratch) {
  if (support.size() == 1) {
    const double g = gram(support[0], support[0]);
    return {g, g};
  }
  gram.principal(support, scratch);
  const JacobiResult r = jacobi_eigenvalues(scratch, support.size());
  if (!r.converged) throw NumericalError("jacobi: no convergence within 100 sweeps");
  return {r.eigenvalues.front(), r.eigenvalues.back()};
}

// Running extremes with their first witness (in the order offered).
struct Extremes {
  double lambda_min = std::numeric_limits<double>::infinity();
  double lambda_max = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> witness_min;
  std::vector<std::size_t> witness_max;
  std::uint64_t evaluated = 0;

  void offer(const EigenPair& e, const std::vector<std::size_t>& support) {
    ++evaluated;
    if (e.lambda_min < lambda_min) {
      lambda_min = e.lambda_min;
      witness_min = support;
    }
    if (e.lambda_max > lambda_max) {
      lambda_max = e.lambda_max;
      witness_max = support;
    }
  }

  void merge(const Extremes& later) {
    evaluated += later.evaluated;
    if (later.lambda_min < lambda_min) {
      lambda_min = later.lambda_min;
      witness_min = later.witness_min;
    }
    if (later.lambda_max > lambda_max) {
      lambda_max = later.lambda_max;
      witness_max = later.witness_max;
    }
  }
};

RipReport make_report(const Extremes& ex, std::size_t sparsity, std::size_t n,
                      RipMethod method) {
  RipReport r;
  r.m = sparsity;
  r.method = method;
  r.lambda_min = ex.lambda_min;
  r.lambda_max = ex.lambda_max;
  r.theta_lower = 1.0 - ex.lambda_min;
  r.theta_upper = ex.lambda_max - 1.0;
  r.theta = std::max({0.0, r.theta_lower, r.theta_upper});
  r.supports_evaluated = ex.evaluated;
  r.witness_min = SupportSet(ex.witness_min, n);
  r.witness_max = SupportSet(ex.witness_max, n);
  return r;
}

void check_raw(const MeasurementMatrix& m) {
  require(m.normalization() == Normalization::raw,
          "spectral: expects a raw matrix (division by k is applied internally)");
}

}  // namespace

SupportSet::SupportSet(std::vector<std::size_t> indices, std::size_t n)
    : indices_(std::move(indices)), n_(n) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    require(indices_[i] < n_, "SupportSet: index out of range");
    require(i == 0 || indices_[i - 1] < indices_[i],
            "SupportSet: indices must be strictly increasing");
  }
}

EigenPair gram_extremal_eigs(const MeasurementMatrix& m, const SupportSet& a) {
  check_raw(m);
  require(!a.empty(), "gram_extremal_eigs: empty support");
  require(a.ambient_dim() == m.cols(), "gram_extremal_eigs: support dimension mismatch");
  GramSource gram(m, false);
  std::vector<double> scratch;
  return extremes(gram, a.indices(), scratch);
}

RipReport rip_exact(const MeasurementMatrix& m, std::size_t sparsity,
                    const RipExactOptions& options) {
  check_raw(m);
  const std::size_t n = m.cols();
  require(sparsity >= 1 && sparsity <= n, "rip_exact: sparsity must be in [1, n]");
  const double count = binomial(n, sparsity);
  if (count > options.budget) {
    throw BudgetExceeded("rip_exact: C(" + std::to_string(n) + ", " +
                         std::to_string(sparsity) + ") supports exceed the budget; use "
                         "rip_monte_carlo");
  }
  const auto total = static_cast<std::uint64_t>(count);
  GramSource gram(m, true);

  const std::size_t blocks =
      static_cast<std::size_t>(std::min<std::uint64_t>(total, 256));
  std::vector<Extremes> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const std::uint64_t lo = total * b / blocks;
    const std::uint64_t hi = total * (b + 1) / blocks;
    std::vector<std::size_t> support = unrank_combination(lo, n, sparsity);
    std::vector<double> scratch;
    for (std::uint64_t r = lo; r < hi; ++r) {
      partial[b].offer(extremes(gram, support, scratch), support);
      next_combination(support, n);
    }
  });
  Extremes all;
  for (const auto& p : partial) all.merge(p);
  return make_report(all, sparsity, n, RipMethod::exact_enumeration);
}

RipReport rip_monte_carlo(const MeasurementMatrix& m, std::size_t sparsity,
                          std::size_t trials, std::uint64_t seed,
                          SupportSampling sampling) {
  check_raw(m);
  const std::size_t n = m.cols();
  require(trials >= 1, "rip_monte_carlo: need at least one trial");
  require(sparsity >= 1 && sparsity <= n, "rip_monte_carlo: sparsity must be in [1, n]");

  const double work = static_cast<double>(trials) * static_cast<double>(sparsity * sparsity);
  GramSource gram(m, 4.0 * work >= static_cast<double>(n) * static_cast<double>(n));

  const double count = binomial(n, sparsity);
  std::uint64_t offset = 0;
  if (sampling == SupportSampling::stratified) {
    require(count < 1.8e19, "rip_monte_carlo: too many supports to stratify");
    offset = derive_seed(seed, {kStratifiedOffsetTag}) % static_cast<std::uint64_t>(count);
  }

  std::vector<EigenPair> values(trials);
  std::vector<std::vector<std::size_t>> supports(trials);
  parallel_for(trials, [&](std::size_t t) {
    std::vector<std::size_t> support;
    if (sampling == SupportSampling::stratified) {
      const auto total = static_cast<std::uint64_t>(count);
      support = unrank_combination((offset + t) % total, n, sparsity);
    } else {
      CounterRng rng(seed, t);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i < sparsity; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
      }
      support.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sparsity));
      std::sort(support.begin(), support.end());
    }
    std::vector<double> scratch;
    values[t] = extremes(gram, support, scratch);
    supports[t] = std::move(support);
  });
  Extremes all;
  for (std::size_t t = 0; t < trials; ++t) all.offer(values[t], supports[t]);
  RipReport r = make_report(all, sparsity, n, RipMethod::monte_carlo);
  r.trials = trials;
  return r;
}

double uup_lambda(std::size_t n, std::size_t k, double theta, const UupConstants& c) {
  require(theta > 0.0 && theta < 1.0, "uup_lambda: theta must lie in (0, 1)");
  require(k >= 1 && n >= 1, "uup_lambda: empty shape");
  require(c.c1 > 0.0 && c.c1_prime > 0.0, "uup_lambda: constants must be positive");
  const double arg = c.c1_prime * static_cast<double>(n) /
                     (static_cast<double>(k) * theta * theta * theta);
  return c.c1 * std::log(arg) / (theta * theta);
}

UupResult check_uup(const MeasurementMatrix& m, double theta, double lambda,
                    const UupOptions& options) {
  check_raw(m);
  require(theta > 0.0 && theta < 1.0, "check_uup: theta must lie in (0, 1)");
  require(lambda > 1.0, "check_uup: lambda must exceed 1");
  UupResult result;
  const double ratio = static_cast<double>(m.rows()) / lambda;
  result.sparsity = std::min<std::size_t>(static_cast<std::size_t>(std::floor(ratio)), m.cols());
  if (result.sparsity == 0) {
    result.degenerate = true;
    result.holds = true;
    return result;
  }
  bool exact = options.route == UupRoute::exact;
  if (options.route == UupRoute::automatic)
    exact = binomial(m.cols(), result.sparsity) <= options.budget;
  if (exact) {
    result.report = rip_exact(m, result.sparsity, {options.budget});
  } else {
    result.report = rip_monte_carlo(m, result.sparsity, options.trials, options.seed);
    result.lower_bound_only = true;
  }
  result.holds = result.report.theta <= theta;
  return result;
}

NetVerification verify_on_net(const MeasurementMatrix& m, const PointSet& points,
                              double theta) {
  require(m.normalization() == Normalization::row_normalized,
          "verify_on_net: expects a row-normalized matrix");
  NetVerification out;
  if (points.empty()) {
    out.degenerate = true;
    return out;
  }
  require(points.dim() == m.cols(), "verify_on_net: net dimension mismatch");
  const double tolerance = theta / 5.0;
  std::vector<double> norms(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    std::vector<double> image(m.rows());
    m.apply(points[i], image);
    norms[i] = std::sqrt(kernels::squared_norm(image));
  });
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (std::fabs(norms[i] - 1.0) > tolerance) out.violations.push_back({i, norms[i]});
  }
  out.all_pass = out.violations.empty();
  return out;
}

std::string to_string(RipMethod method) {
  return method == RipMethod::exact_enumeration ? "exact" : "monte-carlo";
}

void to_json(nlohmann::json& j, const SupportSet& s) { j = s.indices(); }

void to_json(nlohmann::json& j, const RipReport& r) {
  j = nlohmann::json{{"m", r.m},
                     {"theta", r.theta},
                     {"theta_lower", r.theta_lower},
                     {"theta_upper", r.theta_upper},
                     {"method", to_string(r.method)},
                     {"witness_min", r.witness_min},
                     {"witness_max", r.witness_max}};
  if (r.method == RipMethod::monte_carlo) j["trials"] = r.trials;
}

}  // namespace ripl
