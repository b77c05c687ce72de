#pragma once

// Random measurement matrices with independent isotropic subgaussian rows.
//
// Entry (i, j) of a generated matrix depends only on (kind, n, seed, i, j),
// so rows can be produced independently, in any order, on any thread.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ripl {

enum class EnsembleKind {
  gaussian,
  bernoulli,
  uniform_sphere_row,
  custom_bounded_symmetric,
  // Explicit entries supplied by the caller or read from a file.
  external,
};

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

// Finite symmetric law for the custom-bounded-symmetric kind. Entries are
// drawn i.i.d. from it; unit variance keeps rows isotropic.
struct DiscreteLaw {
  std::vector<double> values;
  std::vector<double> probabilities;
};

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::gaussian;
  std::size_t n = 1;  // ambient dimension (columns)
  std::size_t k = 1;  // measurements (rows)
  std::uint64_t seed = 0;
  DiscreteLaw law;  // custom-bounded-symmetric only

  // Throws InvalidArgument unless 1 <= k <= n and the law (if any) is a
  // symmetric probability distribution with variance 1.
  void validate() const;
};

enum class Normalization { raw, row_normalized };

class MeasurementMatrix {
 public:
  // Takes row-major entries of a rows x cols matrix. The spec is recorded as
  // kind `external` with the given shape.
  static MeasurementMatrix from_entries(std::size_t rows, std::size_t cols,
                                        std::vector<double> row_major,
                                        Normalization normalization = Normalization::raw);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const EnsembleSpec& spec() const { return spec_; }
  Normalization normalization() const { return normalization_; }

  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * cols_, cols_};
  }
  std::span<const double> column(std::size_t j) const {
    return {by_column_.data() + j * rows_, rows_};
  }
  std::span<const double> row_major() const { return entries_; }

  // y = A x  (y has rows() entries)
  void apply(std::span<const double> x, std::span<double> y) const;
  // x = A^T y  (x has cols() entries)
  void apply_transpose(std::span<const double> y, std::span<double> x) const;

 private:
  friend MeasurementMatrix generate(const EnsembleSpec& spec);
  friend MeasurementMatrix row_normalize(const MeasurementMatrix& m);

  MeasurementMatrix(EnsembleSpec spec, std::vector<double> entries,
                    Normalization normalization);

  EnsembleSpec spec_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;    // row-major
  std::vector<double> by_column_;  // column-major copy for Gram entries
  Normalization normalization_ = Normalization::raw;
};

// Row `row` of the (conceptually unbounded) matrix for `spec`; out.size() == n.
// Any row index is allowed, including >= k.
void fill_row(const EnsembleSpec& spec, std::uint64_t row, std::span<double> out);

MeasurementMatrix generate(const EnsembleSpec& spec);

// Divides every entry by sqrt(k). Throws InvalidArgument when applied to an
// already normalized matrix.
MeasurementMatrix row_normalize(const MeasurementMatrix& m);

struct Psi2Estimate {
  double alpha_hat = 0.0;
  std::size_t directions_tested = 0;
  std::size_t samples_per_direction = 0;
  double isotropy_max_deviation = 0.0;
  // Set when the empirical Orlicz mean stayed above 2 on the whole search
  // range for some direction; alpha_hat is then +inf.
  bool heavy_tail_warning = false;
};

// Empirical psi_2 norm of a sample: smallest s with mean exp(v^2/s^2) <= 2,
// by bisection. Returns +inf when no s up to 1e6 * rms(v) qualifies.
double empirical_psi2_norm(std::span<const double> values);

// Marginals <X, y> along `directions` random unit vectors.
Psi2Estimate estimate_psi2(const EnsembleSpec& spec, std::size_t directions,
                           std::size_t samples);

// Same, along one fixed direction (normalized internally).
Psi2Estimate estimate_psi2_along(const EnsembleSpec& spec, std::span<const double> y,
                                 std::size_t samples);

void to_json(nlohmann::json& j, const EnsembleSpec& spec);
void from_json(const nlohmann::json& j, EnsembleSpec& spec);

}  // namespace ripl
