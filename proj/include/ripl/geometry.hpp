#pragma once

// Balls of l_p, weak-l_p and sparse vectors, and the inequalities relating
// them: the dual bound for weak-l_p against top-m norms, the block witness
// for 2 conv of sparse balls, truncation of weak-l_p vectors, and m1.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ripl/rng.hpp"

namespace ripl {

enum class BallFamily {
  lp,            // sum |x_i|^p <= radius^p
  weak_lp,       // x_i* <= radius * i^(-1/p)
  l1,
  l2,
  sparse_sphere, // |supp x| <= m, |x| = radius
  sparse_ball,   // |supp x| <= m, |x| <= radius
};

std::string to_string(BallFamily family);
BallFamily ball_family_from_string(const std::string& name);

struct BallDescriptor {
  BallFamily family = BallFamily::l2;
  double p = 1.0;        // lp, weak_lp
  double radius = 1.0;
  std::size_t dim = 1;
  std::size_t sparsity = 0;  // sparse families

  static BallDescriptor euclidean_ball(std::size_t dim, double radius = 1.0);
  // S^(dim-1), stored as the sparse sphere with m = dim.
  static BallDescriptor sphere(std::size_t dim, double radius = 1.0);
  static BallDescriptor sparse(BallFamily family, std::size_t dim, std::size_t m,
                               double radius = 1.0);
  static BallDescriptor weak(std::size_t dim, double p, double radius = 1.0);

  // Throws InvalidArgument for out-of-range parameters.
  void validate() const;
};

// Norm comparisons carry a relative slack of this size.
inline constexpr double kMembershipSlack = 1e-12;

bool member(std::span<const double> x, const BallDescriptor& ball);

struct Rearrangement {
  std::vector<double> values;           // |x| sorted non-increasing
  std::vector<std::size_t> permutation; // values[i] == |x[permutation[i]]|
};

// Ties go to the lower original index.
Rearrangement rearrangement(std::span<const double> x);

// l2 norm of the m largest-magnitude entries.
double top_m_l2(std::span<const double> x, std::size_t m);

// max_i i^(1/p) x_i*  (x lies in r B_{p,inf} iff this is <= r)
double weak_lp_quasinorm(std::span<const double> x, double p);

// Sum over consecutive blocks of m sorted entries of the block l2 norm.
// Bounds the gauge of conv U~_m from above.
double block_norm(std::span<const double> x, std::size_t m);

// Gauge of conv U~_m (the k-support norm, closed form); x lies in
// t conv U~_m iff this is <= t.
double sparse_hull_gauge(std::span<const double> x, std::size_t m);

// Radius (1/p - 1) m^(1/p - 1/2) of the weak-l_p ball in the dual bound.
double dual_bound_radius(double p, std::size_t m);

// The maximizer of <x, z> over r B_{p,inf} cap B_2: z_i* = min(r i^(-1/p), mu x_i*),
// aligned with the signs and order of x.
std::vector<double> weak_lp_l2_maximizer(std::span<const double> x, double p, double r);

// Random points of r B_{p,inf}. Magnitudes follow the envelope r i^(-1/p),
// either exactly or damped by uniform factors, under a random permutation
// and random signs. With `clip_to_unit_ball` the point is then pulled into
// B_2, onto the sphere or strictly inside.
void sample_weak_lp(CounterRng& rng, double p, double r, bool clip_to_unit_ball,
                    std::span<double> out);

// Random points of r B_{p,inf} cap S^(n-1), by rejection; throws
// NumericalError when 10^4 draws in a row are rejected.
void sample_weak_lp_sphere(CounterRng& rng, double p, double r, std::span<double> out);

// Random points of sqrt(m) B_1 cap B_2, half of them on the unit sphere.
void sample_l1_l2(CounterRng& rng, std::size_t m, std::span<double> out);

// Uniform sample from l2 balls, l1 balls, sparse spheres and sparse balls.
// Throws InvalidArgument for the other families.
void sample_ambient(CounterRng& rng, const BallDescriptor& ball, std::span<double> out);

struct DualBoundResult {
  double max_ratio = 0.0;  // <x, z> / (2 top_m_l2(x, m))
  bool pass = true;
  std::size_t probes = 0;
  double acceptance_rate = 1.0;
  double extremal_ratio = 0.0;  // at the exact maximizer
};

DualBoundResult weak_lp_dual_bound_check(std::span<const double> x, double p, std::size_t m,
                                         std::size_t probes, std::uint64_t seed);

enum class InclusionSet { weak_lp, l1 };

struct InclusionResult {
  bool pass = true;
  std::size_t probes = 0;
  std::size_t violations = 0;         // sparse_hull_gauge(z, m) > 2
  std::size_t witness_failures = 0;   // block_norm(z, m) > 2
  double max_gauge = 0.0;
  double max_block_norm = 0.0;
};

// Probes r B_{p,inf} cap B_2 (weak_lp) or sqrt(m) B_1 cap B_2 (l1). A probe
// passes when block_norm(z, m) <= 2, or failing that when the exact gauge
// is <= 2.
InclusionResult hull_inclusion_check(InclusionSet which, std::size_t n, std::size_t m,
                                     double p, std::size_t probes, std::uint64_t seed);

struct TruncationResult {
  std::vector<double> z;
  double error = 0.0;      // |x - z|
  double bound = 0.0;      // 2 (2/p - 1)^(-1/2) delta^(1/p - 1/2)
  std::size_t kept = 0;    // ceil(m / delta), capped at n
};

double truncation_bound(double p, double delta);

// Keeps the ceil(m/delta) largest entries of x and renormalizes. x must lie
// in m^(1/p - 1/2) B_{p,inf} cap S^(n-1) (checked).
TruncationResult truncation_cover_point(std::span<const double> x, double p, std::size_t m,
                                        double delta);

struct QuasiconvexityResult {
  bool pass = true;
  std::size_t trials = 0;
  std::size_t counterexamples = 0;
  // max over trials of |x + y|_{p,inf}; pass iff <= 2 * 2^(1/p).
  double max_sum_quasinorm = 0.0;
};

// Samples x, y in B_{p,inf} and checks x + y in 2a B_{p,inf} with a = 2^(1/p).
QuasiconvexityResult quasiconvexity_constant_check(double p, std::size_t trials,
                                                   std::size_t n, std::uint64_t seed);

// c'_p = ((1/p - 1)^(-1) 20 2^(1/p))^(1 / (1/p - 1/2))
double m1_constant(double p);

// ceil(max(c'_p m, m)); verifies 10 2^(1+1/p) m^(1/p-1/2) <= (1/p-1) m1^(1/p-1/2).
std::size_t compute_m1(double p, std::size_t m);

void to_json(nlohmann::json& j, const BallDescriptor& b);
void from_json(const nlohmann::json& j, BallDescriptor& b);

}  // namespace ripl
