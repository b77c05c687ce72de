#include "ripl/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "ripl/errors.hpp"
#include "ripl/io.hpp"
#include "ripl/kernels.hpp"
#include "ripl/parallel.hpp"
#include "ripl/rng.hpp"
#include "ripl/sampling.hpp"

namespace ripl {

namespace {

constexpr std::uint64_t kDirectionStream = 0x44495245;  // "DIRE"

EnsembleSpec trial_spec(const EnsembleSpec& spec, std::uint64_t seed, std::uint64_t trial) {
  EnsembleSpec out = spec;
  out.seed = derive_seed(seed, {spec.seed, trial});
  return out;
}

// |A x|^2 / k for each x in xs, sharing one fresh matrix.
void normalized_squares(const EnsembleSpec& spec, const std::vector<std::vector<double>>& xs,
                        std::uint64_t seed, std::uint64_t trial, std::span<double> out) {
  const EnsembleSpec one = trial_spec(spec, seed, trial);
  std::vector<double> row(spec.n);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < spec.k; ++i) {
    fill_row(one, i, row);
    for (std::size_t d = 0; d < xs.size(); ++d) {
      const double v = kernels::dot(row, xs[d]);
      out[d] += v * v;
    }
  }
  for (double& v : out) v /= static_cast<double>(spec.k);
}

void check_inputs(const EnsembleSpec& spec, std::span<const double> x, std::size_t trials,
                  const char* who) {
  spec.validate();
  require(spec.kind != EnsembleKind::external, std::string(who) + ": external ensembles have no generator");
  require(x.size() == spec.n, std::string(who) + ": x must have n entries");
  require(trials >= 1, std::string(who) + ": need at least one trial");
}

}  // namespace

double normalized_square(const EnsembleSpec& spec, std::span<const double> x, std::uint64_t seed,
                         std::uint64_t trial) {
  check_inputs(spec, x, 1, "normalized_square");
  double out = 0.0;
  normalized_squares(spec, {std::vector<double>(x.begin(), x.end())}, seed, trial, {&out, 1});
  return out;
}

double mean_normalized_square(const EnsembleSpec& spec, std::span<const double> x,
                              std::size_t trials, std::uint64_t seed) {
  check_inputs(spec, x, trials, "mean_normalized_square");
  const std::vector<std::vector<double>> xs{std::vector<double>(x.begin(), x.end())};
  std::vector<double> value(trials);
  parallel_for(trials, [&](std::size_t t) { normalized_squares(spec, xs, seed, t, {&value[t], 1}); });
  double sum = 0.0;
  for (double v : value) sum += v;
  return sum / static_cast<double>(trials);
}

double expectation_check(const EnsembleSpec& spec, std::size_t directions, std::size_t trials,
                         std::uint64_t seed) {
  spec.validate();
  require(trials >= 100, "expectation_check: need at least 100 trials");
  require(directions >= 1, "expectation_check: need at least one direction");
  std::vector<std::vector<double>> xs(directions, std::vector<double>(spec.n));
  for (std::size_t d = 0; d < directions; ++d) {
    CounterRng rng(derive_seed(seed, {kDirectionStream}), d);
    sample_sphere(rng, xs[d]);
  }
  std::vector<double> value(trials * directions);
  parallel_for(trials, [&](std::size_t t) {
    normalized_squares(spec, xs, seed, t, {value.data() + t * directions, directions});
  });
  double worst = 0.0;
  for (std::size_t d = 0; d < directions; ++d) {
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) sum += value[t * directions + d];
    worst = std::max(worst, std::fabs(sum / static_cast<double>(trials) - 1.0));
  }
  return worst;
}

std::vector<double> default_t_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

TailReport tail_profile(const EnsembleSpec& spec, std::span<const double> x, std::size_t trials,
                        const std::vector<double>& t_grid, std::uint64_t seed) {
  check_inputs(spec, x, trials, "tail_profile");
  const double norm2 = kernels::squared_norm(x);
  require(norm2 > 0.0, "tail_profile: x must be nonzero");
  require(!t_grid.empty(), "tail_profile: empty t grid");
  for (double t : t_grid) require(t > 0.0 && t <= 1.0, "tail_profile: t must lie in (0, 1]");

  const std::vector<std::vector<double>> xs{std::vector<double>(x.begin(), x.end())};
  std::vector<double> deviation(trials);
  parallel_for(trials, [&](std::size_t t) {
    double q = 0.0;
    normalized_squares(spec, xs, seed, t, {&q, 1});
    deviation[t] = std::fabs(q - norm2) / norm2;
  });

  TailReport report;
  report.t_grid = t_grid;
  report.k = spec.k;
  report.trials = trials;
  report.fitted_c0 = std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    std::size_t count = 0;
    for (double d : deviation) count += d >= t ? 1 : 0;
    const double tail = static_cast<double>(count) / static_cast<double>(trials);
    report.exceedances.push_back(count);
    report.empirical_tail.push_back(tail);
    if (count == 0) continue;
    if (count < kMinFitEvents) {
      report.excluded_t.push_back(t);
      continue;
    }
    const double c = -std::log(tail) / (t * t * static_cast<double>(spec.k));
    report.fitted_c0 = std::min(report.fitted_c0, c);
  }
  return report;
}

double bernstein_bound(const TailReport& report, double t) {
  if (std::isinf(report.fitted_c0)) return 0.0;
  return std::exp(-report.fitted_c0 * t * t * static_cast<double>(report.k));
}

// Gaussian rows, n=32, k=16, 1e5 trials, unit x from seeds 0..2: the smallest
// c0 * alpha_hat^4 seen was 2.32. Frozen at half of that.
double bernstein_c_floor() { return 1.15; }

bool bernstein_psi2_consistency(double alpha_hat, const TailReport& report, std::size_t k) {
  require(alpha_hat > 0.0, "bernstein_psi2_consistency: alpha_hat must be positive");
  require(k == report.k, "bernstein_psi2_consistency: k does not match the report");
  if (std::isinf(report.fitted_c0)) return true;
  return report.fitted_c0 >= bernstein_c_floor() / std::pow(alpha_hat, 4.0);
}

KsResult chi_square_ks(const EnsembleSpec& spec, std::span<const double> x, std::size_t trials,
                       std::uint64_t seed) {
  check_inputs(spec, x, trials, "chi_square_ks");
  const double norm2 = kernels::squared_norm(x);
  require(norm2 > 0.0, "chi_square_ks: x must be nonzero");
  const std::vector<std::vector<double>> xs{std::vector<double>(x.begin(), x.end())};
  const double k = static_cast<double>(spec.k);
  std::vector<double> sample(trials);
  parallel_for(trials, [&](std::size_t t) {
    double q = 0.0;
    normalized_squares(spec, xs, seed, t, {&q, 1});
    sample[t] = k * q / norm2;
  });
  std::sort(sample.begin(), sample.end());
  KsResult out;
  out.trials = trials;
  const double n = static_cast<double>(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    const double f = boost::math::gamma_p(k / 2.0, sample[i] / 2.0);
    out.statistic = std::max({out.statistic, (static_cast<double>(i) + 1.0) / n - f,
                              f - static_cast<double>(i) / n});
  }
  out.critical = 1.63 / std::sqrt(n);
  out.pass = out.statistic <= out.critical;
  return out;
}

double chi_square_two_sided_tail(std::size_t k, double t) {
  require(k >= 1 && t > 0.0, "chi_square_two_sided_tail: need k >= 1 and t > 0");
  const double a = static_cast<double>(k) / 2.0;
  const double kd = static_cast<double>(k);
  const double upper = boost::math::gamma_q(a, kd * (1.0 + t) / 2.0);
  const double lower = t < 1.0 ? boost::math::gamma_p(a, kd * (1.0 - t) / 2.0) : 0.0;
  return upper + lower;
}

void to_json(nlohmann::json& j, const TailReport& report) {
  j = nlohmann::json{{"t_grid", report.t_grid},
                     {"empirical_tail", report.empirical_tail},
                     {"exceedances", report.exceedances},
                     {"excluded_t", report.excluded_t},
                     {"k", report.k},
                     {"trials", report.trials},
                     {"directions", report.directions}};
  // JSON has no infinity: an unbounded c0 is null with a flag.
  if (std::isinf(report.fitted_c0)) {
    j["fitted_c0"] = nullptr;
    j["fitted_c0_unbounded"] = true;
  } else {
    j["fitted_c0"] = report.fitted_c0;
    j["fitted_c0_unbounded"] = false;
  }
}

std::string to_csv(const TailReport& report) {
  std::string out = "t,empirical_tail,bernstein_bound_at_fitted_c0\n";
  for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
    const double t = report.t_grid[i];
    out += io::format_double(t) + "," + io::format_double(report.empirical_tail[i]) + "," +
           io::format_double(bernstein_bound(report, t)) + "\n";
  }
  return out;
}

}  // namespace ripl
