#include "ripl/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ripl/errors.hpp"
#include "ripl/kernels.hpp"
#include "ripl/parallel.hpp"
#include "ripl/rng.hpp"
#include "ripl/sampling.hpp"

namespace ripl {

namespace {

constexpr std::uint64_t kDirectionStream = 0x5053493244495253ULL;  // "PSI2DIRS"

void validate_law(const DiscreteLaw& law) {
  require(!law.values.empty(), "custom law: empty support");
  require(law.values.size() == law.probabilities.size(),
          "custom law: support and probabilities differ in length");
  double total = 0.0;
  double variance = 0.0;
  for (std::size_t i = 0; i < law.values.size(); ++i) {
    const double p = law.probabilities[i];
    require(p >= 0.0 && std::isfinite(law.values[i]), "custom law: bad atom");
    total += p;
    variance += p * law.values[i] * law.values[i];
  }
  require(std::fabs(total - 1.0) <= 1e-12, "custom law: probabilities must sum to 1");
  require(std::fabs(variance - 1.0) <= 1e-12, "custom law: variance must be 1");
  // Symmetry: the mass at v equals the mass at -v.
  for (std::size_t i = 0; i < law.values.size(); ++i) {
    double mass = 0.0;
    double mirror = 0.0;
    for (std::size_t j = 0; j < law.values.size(); ++j) {
      if (law.values[j] == law.values[i]) mass += law.probabilities[j];
      if (law.values[j] == -law.values[i]) mirror += law.probabilities[j];
    }
    require(std::fabs(mass - mirror) <= 1e-12, "custom law: not symmetric");
  }
}

double draw_from_law(const DiscreteLaw& law, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < law.values.size(); ++i) {
    acc += law.probabilities[i];
    if (u < acc) return law.values[i];
  }
  return law.values.back();
}

Psi2Estimate estimate_along_unit(const EnsembleSpec& spec, std::span<const double> y,
                                 std::size_t samples) {
  std::vector<double> marginals(samples);
  parallel_for(samples, [&](std::size_t s) {
    std::vector<double> x(spec.n);
    fill_row(spec, s, x);
    marginals[s] = kernels::dot(x, y);
  });
  Psi2Estimate est;
  est.directions_tested = 1;
  est.samples_per_direction = samples;
  double second_moment = 0.0;
  for (double v : marginals) second_moment += v * v;
  second_moment /= static_cast<double>(samples);
  est.isotropy_max_deviation = std::fabs(second_moment - kernels::squared_norm(y));
  est.alpha_hat = empirical_psi2_norm(marginals);
  est.heavy_tail_warning = std::isinf(est.alpha_hat);
  return est;
}

}  // namespace

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::gaussian: return "gaussian";
    case EnsembleKind::bernoulli: return "bernoulli";
    case EnsembleKind::uniform_sphere_row: return "uniform-sphere-row";
    case EnsembleKind::custom_bounded_symmetric: return "custom-bounded-symmetric";
    case EnsembleKind::external: return "external";
  }
  return "unknown";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
  for (auto kind : {EnsembleKind::gaussian, EnsembleKind::bernoulli,
                    EnsembleKind::uniform_sphere_row,
                    EnsembleKind::custom_bounded_symmetric, EnsembleKind::external}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown ensemble kind '" + name + "'");
}

void EnsembleSpec::validate() const {
  require(n >= 1, "ensemble: n must be positive");
  require(k >= 1, "ensemble: k must be positive");
  require(k <= n, "ensemble: k must not exceed n");
  if (kind == EnsembleKind::custom_bounded_symmetric) validate_law(law);
}

MeasurementMatrix::MeasurementMatrix(EnsembleSpec spec, std::vector<double> entries,
                                     Normalization normalization)
    : spec_(std::move(spec)),
      rows_(spec_.k),
      cols_(spec_.n),
      entries_(std::move(entries)),
      by_column_(entries_.size()),
      normalization_(normalization) {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) by_column_[j * rows_ + i] = entries_[i * cols_ + j];
}

MeasurementMatrix MeasurementMatrix::from_entries(std::size_t rows, std::size_t cols,
                                                  std::vector<double> row_major,
                                                  Normalization normalization) {
  require(rows >= 1 && cols >= 1, "matrix: empty shape");
  require(row_major.size() == rows * cols, "matrix: entry count does not match shape");
  EnsembleSpec spec;
  spec.kind = EnsembleKind::external;
  spec.n = cols;
  spec.k = rows;
  return MeasurementMatrix(std::move(spec), std::move(row_major), normalization);
}

void MeasurementMatrix::apply(std::span<const double> x, std::span<double> y) const {
  kernels::active().gemv(entries_.data(), rows_, cols_, x.data(), y.data());
}

void MeasurementMatrix::apply_transpose(std::span<const double> y, std::span<double> x) const {
  kernels::active().gemv_t(entries_.data(), rows_, cols_, y.data(), x.data());
}

void fill_row(const EnsembleSpec& spec, std::uint64_t row, std::span<double> out) {
  CounterRng rng(spec.seed, row);
  switch (spec.kind) {
    case EnsembleKind::gaussian:
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = rng.normal_at(j);
      break;
    case EnsembleKind::bernoulli:
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = (rng.at(j) >> 63) ? 1.0 : -1.0;
      break;
    case EnsembleKind::uniform_sphere_row: {
      sample_sphere(rng, out);
      const double scale = std::sqrt(static_cast<double>(out.size()));
      for (double& v : out) v *= scale;
      break;
    }
    case EnsembleKind::custom_bounded_symmetric:
      for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = draw_from_law(spec.law, rng.uniform_at(j));
      break;
    case EnsembleKind::external:
      throw InvalidArgument("fill_row: external matrices have no generator");
  }
}

MeasurementMatrix generate(const EnsembleSpec& spec) {
  spec.validate();
  require(spec.kind != EnsembleKind::external, "generate: external kind has no generator");
  std::vector<double> entries(spec.k * spec.n);
  parallel_for(spec.k, [&](std::size_t i) {
    fill_row(spec, i, std::span<double>(entries.data() + i * spec.n, spec.n));
  });
  return MeasurementMatrix(spec, std::move(entries), Normalization::raw);
}

MeasurementMatrix row_normalize(const MeasurementMatrix& m) {
  if (m.normalization() != Normalization::raw)
    throw InvalidArgument("row_normalize: matrix is already normalized");
  const double scale = std::sqrt(static_cast<double>(m.rows()));
  std::vector<double> entries(m.row_major().begin(), m.row_major().end());
  for (double& v : entries) v /= scale;
  return MeasurementMatrix(m.spec(), std::move(entries), Normalization::row_normalized);
}

double empirical_psi2_norm(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double max_abs = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    max_abs = std::max(max_abs, std::fabs(v));
    sum_sq += v * v;
  }
  if (max_abs == 0.0) return 0.0;
  const double rms = std::sqrt(sum_sq / static_cast<double>(values.size()));
  auto orlicz_mean = [&](double s) {
    const double inv = 1.0 / (s * s);
    double acc = 0.0;
    for (double v : values) acc += std::exp(v * v * inv);
    return acc / static_cast<double>(values.size());
  };
  // mean exp(v^2/s^2) is decreasing in s; bracket the crossing of 2.
  double hi = std::max(rms, 1e-300);
  const double hi_cap = 1e6 * rms;
  while (orlicz_mean(hi) > 2.0) {
    hi *= 2.0;
    if (hi > hi_cap) return std::numeric_limits<double>::infinity();
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid > 0.0 && orlicz_mean(mid) <= 2.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

Psi2Estimate estimate_psi2(const EnsembleSpec& spec, std::size_t directions,
                           std::size_t samples) {
  spec.validate();
  require(directions >= 1, "estimate_psi2: need at least one direction");
  require(samples >= 100, "estimate_psi2: need at least 100 samples");
  Psi2Estimate total;
  total.directions_tested = directions;
  total.samples_per_direction = samples;
  for (std::size_t d = 0; d < directions; ++d) {
    CounterRng rng(derive_seed(spec.seed, {kDirectionStream}), d);
    std::vector<double> y(spec.n);
    sample_sphere(rng, y);
    const Psi2Estimate one = estimate_along_unit(spec, y, samples);
    total.alpha_hat = std::max(total.alpha_hat, one.alpha_hat);
    total.isotropy_max_deviation =
        std::max(total.isotropy_max_deviation, one.isotropy_max_deviation);
    total.heavy_tail_warning = total.heavy_tail_warning || one.heavy_tail_warning;
  }
  return total;
}

Psi2Estimate estimate_psi2_along(const EnsembleSpec& spec, std::span<const double> y,
                                 std::size_t samples) {
  spec.validate();
  require(y.size() == spec.n, "estimate_psi2_along: direction has wrong dimension");
  require(samples >= 100, "estimate_psi2_along: need at least 100 samples");
  const double norm = std::sqrt(kernels::squared_norm(y));
  require(norm > 0.0, "estimate_psi2_along: zero direction");
  std::vector<double> unit(y.begin(), y.end());
  for (double& v : unit) v /= norm;
  return estimate_along_unit(spec, unit, samples);
}

void to_json(nlohmann::json& j, const EnsembleSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},
                     {"n", spec.n},
                     {"k", spec.k},
                     {"seed", spec.seed}};
  if (spec.kind == EnsembleKind::custom_bounded_symmetric) {
    j["support"] = spec.law.values;
    j["probabilities"] = spec.law.probabilities;
  }
}

void from_json(const nlohmann::json& j, EnsembleSpec& spec) {
  spec.kind = ensemble_kind_from_string(j.at("kind").get<std::string>());
  spec.n = j.at("n").get<std::size_t>();
  spec.k = j.at("k").get<std::size_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.law = {};
  if (j.contains("support")) spec.law.values = j.at("support").get<std::vector<double>>();
  if (j.contains("probabilities"))
    spec.law.probabilities = j.at("probabilities").get<std::vector<double>>();
}

}  // namespace ripl
