#include "ripl/nets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ripl/combinatorics.hpp"
#include "ripl/errors.hpp"
#include "ripl/kernels.hpp"
#include "ripl/parallel.hpp"
#include "ripl/rng.hpp"
#include "spatial_index.hpp"

namespace ripl {

namespace {

constexpr std::uint64_t kCandidateStream = 0x43414E44;  // "CAND"
constexpr std::uint64_t kSaturationStream = 0x53415455;  // "SATU"

bool is_unit_ball(const BallDescriptor& b) {
  return b.radius == 1.0 && (b.family == BallFamily::l2 ||
                             (b.family == BallFamily::sparse_ball && b.sparsity == b.dim));
}

}  // namespace

double separated_net_bound(std::size_t dim, double epsilon) {
  return std::pow(1.0 + 2.0 / epsilon, static_cast<double>(dim));
}

Net greedy_separated_net(std::size_t dim, double epsilon, NetAmbient ambient, std::uint64_t seed,
                         const NetOptions& options) {
  require(dim >= 1, "greedy_separated_net: dim must be positive");
  require(epsilon > 0.0 && epsilon <= 2.0, "greedy_separated_net: epsilon must lie in (0, 2]");
  Net net;
  net.epsilon = epsilon;
  net.ambient = ambient == NetAmbient::ball ? BallDescriptor::euclidean_ball(dim)
                                            : BallDescriptor::sphere(dim);
  net.points = PointSet(dim);
  const double bound = separated_net_bound(dim, epsilon);
  const std::size_t stall = options.stall_limit ? options.stall_limit : 50 * dim;

  detail::SpatialIndex index(net.points, epsilon);
  std::vector<double> x(dim);
  auto offer = [&](std::span<const double> candidate) {
    if (index.any_within(candidate, epsilon)) return false;
    net.points.push_back(candidate);
    index.insert(net.points.size() - 1);
    if (static_cast<double>(net.points.size()) > bound)
      throw NumericalError("greedy_separated_net: size exceeds (1 + 2/eps)^dim");
    return true;
  };

  CounterRng candidates(seed, kCandidateStream);
  for (std::size_t rejected = 0; rejected < stall;) {
    sample_ambient(candidates, net.ambient, x);
    rejected = offer(x) ? 0 : rejected + 1;
  }

  if (options.cover_probes > 0) {
    CounterRng probes(seed, kSaturationStream);
    for (;;) {
      bool covered = true;
      for (std::size_t i = 0; i < options.cover_probes; ++i) {
        sample_ambient(probes, net.ambient, x);
        if (offer(x)) covered = false;
      }
      if (covered) break;
    }
    net.certified_cover = true;
    net.probes_used = options.cover_probes;
  }
  net.certified_separated = true;
  return net;
}

CoverCheck cover_check(const Net& net, std::size_t probes, std::uint64_t seed) {
  require(probes >= 1, "cover_check: need at least one probe");
  CoverCheck out;
  out.probes = probes;
  if (net.points.empty()) {
    out.max_observed_distance = std::numeric_limits<double>::infinity();
    return out;
  }
  require(net.points.dim() == net.ambient.dim, "cover_check: net and ambient differ in dimension");
  detail::SpatialIndex index(net.points, net.epsilon);
  index.insert_all();
  std::vector<double> distance(probes);
  parallel_for(probes, [&](std::size_t i) {
    CounterRng rng(seed, i);
    std::vector<double> x(net.ambient.dim);
    sample_ambient(rng, net.ambient, x);
    const auto near = index.nearest_within(x, net.epsilon);
    distance[i] = near ? near->distance : index.nearest(x).distance;
  });
  out.pass = true;
  for (double d : distance) {
    out.max_observed_distance = std::max(out.max_observed_distance, d);
    if (d > net.epsilon) out.pass = false;
  }
  return out;
}

double min_pairwise_distance(const PointSet& points) {
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best2 = std::min(best2, kernels::squared_distance(points[i], points[j]));
  return std::sqrt(best2);
}

double sparse_net_bound(std::size_t n, std::size_t m, double epsilon) {
  return std::pow(5.0 / epsilon, static_cast<double>(m)) * binomial(n, m);
}

Net sparse_set_net(std::size_t n, std::size_t m, double epsilon, SparseTarget target,
                   std::uint64_t seed, const NetOptions& options, double point_budget) {
  require(m >= 1 && m <= n, "sparse_set_net: need 1 <= m <= n");
  require(epsilon > 0.0 && epsilon <= 2.0, "sparse_set_net: epsilon must lie in (0, 2]");
  const double bound = sparse_net_bound(n, m, epsilon);
  if (bound > point_budget)
    throw BudgetExceeded("sparse_set_net: (5/eps)^m C(n, m) exceeds the point budget");
  const NetAmbient base_ambient = target == SparseTarget::sphere ? NetAmbient::sphere : NetAmbient::ball;
  Net base = greedy_separated_net(m, epsilon, base_ambient, seed, options);
  if (m == n) return base;

  Net net;
  net.epsilon = epsilon;
  net.ambient = BallDescriptor::sparse(
      target == SparseTarget::sphere ? BallFamily::sparse_sphere : BallFamily::sparse_ball, n, m);
  net.points = PointSet(n);
  net.certified_cover = base.certified_cover;
  net.probes_used = base.probes_used;
  std::vector<std::size_t> support(m);
  for (std::size_t i = 0; i < m; ++i) support[i] = i;
  std::vector<double> x(n);
  do {
    for (std::size_t b = 0; b < base.points.size(); ++b) {
      std::fill(x.begin(), x.end(), 0.0);
      const auto p = base.points[b];
      for (std::size_t i = 0; i < m; ++i) x[support[i]] = p[i];
      net.points.push_back(x);
    }
  } while (next_combination(support, n));
  if (static_cast<double>(net.points.size()) > bound)
    throw NumericalError("sparse_set_net: size exceeds (5/eps)^m C(n, m)");
  return net;
}

Net difference_set_net(std::size_t n, std::size_t m, double r, std::uint64_t seed,
                       const NetOptions& options, double point_budget) {
  require(r > 0.0 && r <= 1.0, "difference_set_net: r must lie in (0, 1]");
  require(m >= 1 && m <= n, "difference_set_net: need 1 <= m <= n");
  const std::size_t doubled = std::min(2 * m, n);
  Net net = sparse_set_net(n, doubled, 0.5, SparseTarget::ball, seed, options, point_budget);
  for (std::size_t i = 0; i < net.points.size(); ++i)
    for (double& v : net.points.mutable_point(i)) v *= r;
  net.epsilon = 0.5 * r;
  net.ambient = BallDescriptor::sparse(BallFamily::sparse_ball, n, doubled, r);
  return net;
}

HullDecomposition hull_decompose(std::span<const double> z, const Net& net, std::size_t rounds) {
  require(net.certified_cover, "hull_decompose: net is not a certified cover");
  require(is_unit_ball(net.ambient), "hull_decompose: net must cover the unit ball");
  require(z.size() == net.points.dim(), "hull_decompose: dimension mismatch");
  require(std::sqrt(kernels::squared_norm(z)) <= 1.0 + 1e-12, "hull_decompose: target outside the unit ball");
  require(net.epsilon < 1.0, "hull_decompose: epsilon must be below 1");
  detail::SpatialIndex index(net.points, net.epsilon);
  index.insert_all();

  HullDecomposition out;
  out.target.assign(z.begin(), z.end());
  std::vector<double> w(z.begin(), z.end());
  double coefficient = 1.0;
  for (std::size_t t = 0; t < rounds; ++t) {
    const auto near = index.nearest_within(w, net.epsilon);
    if (!near) throw CoverViolation("hull_decompose: remainder has no net point within epsilon");
    out.terms.push_back({coefficient, near->index});
    const auto p = net.points[near->index];
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (w[i] - p[i]) / net.epsilon;
    coefficient *= net.epsilon;
    ++out.rounds;
    if (kernels::squared_norm(w) == 0.0) break;
  }
  std::vector<double> residual(z.begin(), z.end());
  for (const auto& term : out.terms) kernels::axpy(-term.coefficient, net.points[term.index], residual);
  out.residual_norm = std::sqrt(kernels::squared_norm(residual));
  return out;
}

double support_function(const BallDescriptor& ball, std::span<const double> g) {
  ball.validate();
  require(g.size() == ball.dim, "support_function: dimension mismatch");
  switch (ball.family) {
    case BallFamily::sparse_sphere:
    case BallFamily::sparse_ball:
      return ball.radius * top_m_l2(g, ball.sparsity);
    case BallFamily::l1: {
      double best = 0.0;
      for (double v : g) best = std::max(best, std::fabs(v));
      return ball.radius * best;
    }
    case BallFamily::l2:
      return ball.radius * std::sqrt(kernels::squared_norm(g));
    case BallFamily::weak_lp: {
      const auto r = rearrangement(g);
      double s = 0.0;
      for (std::size_t i = 0; i < r.values.size(); ++i)
        s += r.values[i] * std::pow(static_cast<double>(i + 1), -1.0 / ball.p);
      return ball.radius * s;
    }
    default:
      throw InvalidArgument("support_function: unsupported family " + to_string(ball.family));
  }
}

WidthEstimate gaussian_width(const BallDescriptor& ball, std::size_t samples, std::uint64_t seed) {
  require(samples >= 100, "gaussian_width: need at least 100 samples");
  ball.validate();
  std::vector<double> value(samples);
  parallel_for(samples, [&](std::size_t s) {
    const CounterRng rng(seed, s);
    std::vector<double> g(ball.dim);
    for (std::size_t i = 0; i < ball.dim; ++i) g[i] = rng.normal_at(i);
    value[s] = support_function(ball, g);
  });
  double sum = 0.0;
  for (double v : value) sum += v;
  const double mean = sum / static_cast<double>(samples);
  double var = 0.0;
  for (double v : value) var += (v - mean) * (v - mean);
  var /= static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

void to_json(nlohmann::json& j, const Net& net) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    const auto p = net.points[i];
    points.push_back(std::vector<double>(p.begin(), p.end()));
  }
  j = nlohmann::json{{"ambient", net.ambient},
                     {"epsilon", net.epsilon},
                     {"points", std::move(points)},
                     {"certified_cover", net.certified_cover},
                     {"certified_separated", net.certified_separated},
                     {"cover_certificate", "statistical"},
                     {"probes_used", net.probes_used}};
}

void from_json(const nlohmann::json& j, Net& net) {
  net = Net{};
  j.at("ambient").get_to(net.ambient);
  net.epsilon = j.at("epsilon").get<double>();
  net.certified_cover = j.value("certified_cover", false);
  net.certified_separated = j.value("certified_separated", false);
  net.probes_used = j.value("probes_used", std::size_t{0});
  net.points = PointSet(net.ambient.dim);
  for (const auto& p : j.at("points")) {
    const auto coords = p.get<std::vector<double>>();
    require(coords.size() == net.ambient.dim, "net: point length differs from the ambient dimension");
    net.points.push_back(coords);
  }
}

}  // namespace ripl
