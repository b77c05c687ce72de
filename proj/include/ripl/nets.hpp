#pragma once

// Finite nets of balls, spheres and sparse sets, convex hull certificates,
// and Gaussian widths.
//
// Separation of a greedy net is exact. Covering is certified statistically:
// a net is marked as a cover once a batch of random probes from the ambient
// set all land within epsilon of it.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "ripl/geometry.hpp"
#include "ripl/point_set.hpp"

namespace ripl {

struct Net {
  PointSet points;
  double epsilon = 0.0;
  BallDescriptor ambient;
  bool certified_cover = false;     // statistical, see probes_used
  bool certified_separated = false; // exact: pairwise distances > epsilon
  std::size_t probes_used = 0;      // size of the probe batch that passed
};

enum class NetAmbient { ball, sphere };

struct NetOptions {
  // Consecutive rejected candidates that end the greedy phase; 0 means 50 * dim.
  std::size_t stall_limit = 0;
  // After the greedy phase, probe batches of this size are drawn and any
  // probe farther than epsilon from the net joins it, until a whole batch
  // is covered. 0 skips this and leaves certified_cover false.
  std::size_t cover_probes = 10000;
};

// (1 + 2/epsilon)^dim
double separated_net_bound(std::size_t dim, double epsilon);

// Maximal epsilon-separated subset of B_2^dim or S^(dim-1), built greedily
// from a seeded stream of uniform candidates. Throws NumericalError if the
// size ever exceeds separated_net_bound.
Net greedy_separated_net(std::size_t dim, double epsilon, NetAmbient ambient, std::uint64_t seed,
                         const NetOptions& options = {});

struct CoverCheck {
  double max_observed_distance = 0.0;
  bool pass = false;
  std::size_t probes = 0;
};

// Uniform probes from net.ambient; passes iff each lies within epsilon of the net.
CoverCheck cover_check(const Net& net, std::size_t probes, std::uint64_t seed);

// Exact minimum pairwise distance (full scan); +inf for fewer than two points.
double min_pairwise_distance(const PointSet& points);

enum class SparseTarget { sphere, ball };

// (5/epsilon)^m C(n, m)
double sparse_net_bound(std::size_t n, std::size_t m, double epsilon);

// One m-dimensional net, embedded on every support of size m. With m == n
// this is greedy_separated_net(n, ...). Throws BudgetExceeded when
// sparse_net_bound exceeds point_budget.
Net sparse_set_net(std::size_t n, std::size_t m, double epsilon, SparseTarget target,
                   std::uint64_t seed, const NetOptions& options = {},
                   double point_budget = 2e6);

// r times a 1/2-cover of U~_{min(2m, n)}, so that (U_m - U_m) cap r B_2 lies
// in 2 conv of the result.
Net difference_set_net(std::size_t n, std::size_t m, double r, std::uint64_t seed,
                       const NetOptions& options = {}, double point_budget = 2e6);

struct HullTerm {
  double coefficient = 0.0;
  std::size_t index = 0;
};

struct HullDecomposition {
  std::vector<double> target;
  std::vector<HullTerm> terms;   // coefficients 1, eps, eps^2, ...
  double residual_norm = 0.0;    // |target - sum coefficient * point|, recomputed
  std::size_t rounds = 0;
};

// z = x0 + eps x1 + eps^2 x2 + ... with each x_t the nearest net point to the
// running remainder. Stops early once the remainder is exactly zero. Requires a certified cover
// of the unit ball. Throws CoverViolation when some remainder has no net
// point within epsilon.
HullDecomposition hull_decompose(std::span<const double> z, const Net& net, std::size_t rounds);

class CoverViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// out = argmax over the generating set of <direction, p>.
using LinearOracle = std::function<void(std::span<const double> direction, std::span<double> out)>;

// Maximizer of <direction, u> over U~_m: the top-m restriction, normalized.
LinearOracle sparse_ball_oracle(std::size_t m);

struct HullOptions {
  double gap_tolerance = 1e-9;
  std::size_t max_iterations = 100000;
};

enum class HullVerdict { member, outside, indeterminate };

struct HullMembership {
  HullVerdict verdict = HullVerdict::indeterminate;
  std::vector<double> separating_direction;  // unit; set when outside
  double margin = 0.0;     // <u, z> - max over the hull of <u, .>, when outside
  double distance = 0.0;   // |z - y| at the final iterate y
  double gap = 0.0;        // final Frank-Wolfe duality gap
  std::size_t iterations = 0;

  bool inside() const { return verdict == HullVerdict::member; }
};

// Is z in blowup * conv(points)? Away-step Frank-Wolfe on |y - z|^2 / 2.
// Outside is certified by a separating direction; member means the duality
// gap fell below the tolerance with no separation found.
HullMembership hull_membership(std::span<const double> z, const PointSet& points, double blowup,
                               const HullOptions& options = {});

// Same over the hull of an implicit set given by its linear oracle.
HullMembership hull_membership(std::span<const double> z, const LinearOracle& oracle,
                               double blowup, const HullOptions& options = {});

struct WidthEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// sup over the ball of |<g, t>|, in closed form for sparse spheres and
// balls, l1, l2 and weak-l_p balls.
double support_function(const BallDescriptor& ball, std::span<const double> g);

// Monte Carlo mean of support_function at standard Gaussian g.
WidthEstimate gaussian_width(const BallDescriptor& ball, std::size_t samples, std::uint64_t seed);

void to_json(nlohmann::json& j, const Net& net);
// Throws InvalidArgument when a point's length differs from the ambient dimension.
void from_json(const nlohmann::json& j, Net& net);

}  // namespace ripl
