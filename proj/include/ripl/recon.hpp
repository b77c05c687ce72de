#pragma once

// Approximate reconstruction from linear measurements: l1 minimization,
// kernel geometry and per-instance kernel radius certificates.
//
// Kernel sizes are reported two ways. The certificate bounds the radius
// sup |z| over z in ker(A) cap ball; the diameter of that symmetric set is
// twice the radius, and kernel_diameter_lower reports a diameter.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ripl/ensembles.hpp"
#include "ripl/geometry.hpp"
#include "ripl/point_set.hpp"

namespace ripl {

struct KernelBasis {
  PointSet basis;  // orthonormal, n entries each
  std::size_t dim = 0;
  std::size_t rank = 0;
};

// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankThreshold = 1e-10;

KernelBasis kernel_basis(const MeasurementMatrix& m);

enum class L1Mode { exact, iterative };
std::string to_string(L1Mode mode);
L1Mode l1_mode_from_string(const std::string& name);

struct L1Options {
  double penalty = 1.0;
  std::size_t max_iterations = 100000;
  double feasibility_tolerance = 1e-8;  // |A x - b|, relative to max(1, |b|)
  double stall_tolerance = 1e-9;        // relative l1 change over the window
  std::size_t stall_window = 100;
  double support_budget = 2e6;          // exact mode: C(n, rank) limit
};

struct L1Solution {
  std::vector<double> x;
  double objective = 0.0;  // |x|_1
  double residual = 0.0;   // |A x - b|
  std::size_t iterations = 0;
  bool converged = false;  // iterative mode: stopping rule met before the cap
  L1Mode solver = L1Mode::iterative;
};

// argmin |x|_1 subject to A x = b. Throws Infeasible when b is not in the
// range of A, BudgetExceeded when exact mode would enumerate too many
// supports.
//
// exact: every basic solution (support of size rank(A) with independent
// columns) is solved and the smallest l1 norm kept.
// iterative: ADMM with the x-step an exact projection onto {A x = b} and the
// z-step soft thresholding; b is rescaled internally so the penalty acts on
// a unit-size problem.
L1Solution l1_minimize(const MeasurementMatrix& m, std::span<const double> b, L1Mode mode,
                       const L1Options& options = {});

// Families with a kernel search and certificate.
void require_recon_ball(const BallDescriptor& ball);

// 2 sup |z| over z in ker(A) cap ball, from below: ascent on |z| / gauge(z)
// in kernel coordinates started from kernel projections of the coordinate
// vectors and from random points. For l1 balls each local maximum is snapped
// to the exact vertex on its support. Returns 0 when the kernel is trivial.
double kernel_diameter_lower(const MeasurementMatrix& m, const BallDescriptor& ball,
                             std::size_t restarts, std::uint64_t seed);

enum class CertificateRoute {
  empty_sphere_section,  // ball cap rho S is empty
  signed_basis,          // l1 ball at rho = radius: the section is {+-e_i}
  nets,
};
std::string to_string(CertificateRoute route);

struct RadiusCertificate {
  bool certified = false;
  double rho = 0.0;
  double theta = 0.0;
  CertificateRoute route = CertificateRoute::nets;
  std::size_t cover_size = 0;       // points checked for near isometry
  std::size_t difference_size = 0;  // points checked for the 2|z| bound
  double worst_isometry_gap = 0.0;  // max | |A~ x0| - 1 | over the cover
  double worst_expansion = 0.0;     // max |A~ z| / |z| over the difference net
  double hull_factor = 0.0;         // (T - T) cap (theta/5) B2 in hull_factor conv
  double norm_lower_bound = 0.0;    // inf of |A~ x| over the section it implies
};

// Per-instance check that ker(A~) cap ball lies in rho B2, A~ = A / sqrt(k)
// for raw matrices. The section T = ball cap rho S, scaled to the sphere, is
// covered at theta/5 and its small differences are hulled by a scaled
// half-net; certified means every cover point satisfies | |A~ x0| - 1 | <=
// theta/5, every difference point |A~ z| <= 2 |z|, and together they force
// |A~ x| > 0 on T. Throws BudgetExceeded when the nets would exceed
// point_budget points.
RadiusCertificate kernel_diameter_upper(const MeasurementMatrix& m, const BallDescriptor& ball,
                                        double rho, double theta, std::uint64_t seed,
                                        double point_budget = 2e6);

// Smallest rho on the grid radius * 2^(-j/2), j = 0, 1, ..., 40, that certifies,
// stopping at the first budget overflow or failure. certified is false when
// even rho = radius fails.
RadiusCertificate certify_kernel_radius(const MeasurementMatrix& m, const BallDescriptor& ball,
                                        double theta, std::uint64_t seed,
                                        double point_budget = 2e6);

// Quasi-convexity constant: 2^(1/p) for weak-lp balls, 1 for l1 balls.
double quasi_convexity_constant(const BallDescriptor& ball);

enum class SignalModel { sparse, weak_lp_extremal, random_ball, zero };
std::string to_string(SignalModel model);
SignalModel signal_model_from_string(const std::string& name);

// A signal in the ball. sparse: random support of the given size with
// Gaussian entries, scaled to the ball's boundary. weak_lp_extremal: the
// envelope i^(-1/p) with random signs and order, scaled to the boundary
// (p = 1 for l1 balls). random_ball: a random point of the ball. zero: 0.
std::vector<double> draw_signal(const BallDescriptor& ball, SignalModel model, std::size_t sparsity,
                                std::uint64_t seed);

// Error bound scale * (log(c n / k) / k)^(1/p - 1/2).
struct ErrorBoundConstants {
  double scale = 1.0;
  double log_factor = 1.0;
};
double reconstruction_error_bound(std::size_t n, std::size_t k, double p,
                                  const ErrorBoundConstants& c);
ErrorBoundConstants fitted_error_bound_constants(const BallDescriptor& ball);

struct ReconOptions {
  SignalModel model = SignalModel::weak_lp_extremal;
  std::size_t sparsity = 4;
  L1Mode solver = L1Mode::iterative;
  bool certify = false;
  double theta = 0.5;
  double point_budget = 2e6;
};

struct ReconResult {
  std::vector<double> t0;
  std::vector<double> b;
  std::vector<double> x_hat;
  double error = 0.0;
  double bound = 0.0;  // fitted error-bound formula
  bool certified = false;
  double rho = 0.0;                // certified kernel radius, 0 when not certified
  double certified_bound = 0.0;    // 2 a rho
  double solver_residual = 0.0;
  L1Mode solver = L1Mode::iterative;
};

// Draws A from spec (reseeded from seed), a signal t0, and recovers it from
// b = A t0 by l1 minimization.
ReconResult recon_experiment(const EnsembleSpec& spec, const BallDescriptor& ball,
                             std::uint64_t seed, const ReconOptions& options = {});

struct ReconSweepConfig {
  EnsembleSpec ensemble;  // n and kind; k and seed come from the sweep
  BallDescriptor ball;
  ReconOptions options;
  std::uint64_t seed_lo = 0;
  std::uint64_t seed_hi = 0;  // exclusive
  std::vector<std::size_t> k_list;
};

struct ReconRow {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  double p = 1.0;
  double error = 0.0;
  double rho = 0.0;
  bool certified = false;
  double solver_tol = 0.0;
};

// One row per (seed, k), seeds outer, in order.
std::vector<ReconRow> recon_sweep(const ReconSweepConfig& config);

// Header seed,n,k,p,error,rho,certified,solver_tol
std::string recon_rows_to_csv(const std::vector<ReconRow>& rows);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least squares slope of log(median error over seeds) against log k.
SlopeFit error_exponent_fit(const std::vector<ReconRow>& rows);

void to_json(nlohmann::json& j, const ReconSweepConfig& config);
void from_json(const nlohmann::json& j, ReconSweepConfig& config);
void to_json(nlohmann::json& j, const RadiusCertificate& c);

}  // namespace ripl
