#include <algorithm>
#include <cmath>
#include <limits>

#include "ripl/errors.hpp"
#include "ripl/kernels.hpp"
#include "ripl/nets.hpp"

namespace ripl {

namespace {

// A separated point refines its direction until the gap falls to this
// fraction of |y - z|^2, or for at most this many further iterations.
constexpr double kSharpenTolerance = 1e-3;
constexpr std::size_t kSharpenIterations = 1000;

struct Atom {
  std::vector<double> point;  // already multiplied by the blowup
  double weight = 0.0;
};

HullMembership away_step_frank_wolfe(std::span<const double> z, const LinearOracle& oracle,
                                     double blowup, std::vector<double> start,
                                     const HullOptions& options) {
  const std::size_t dim = z.size();
  for (double& v : start) v *= blowup;
  std::vector<Atom> active{{std::move(start), 1.0}};
  std::vector<double> y = active.front().point;
  std::vector<double> d(dim);
  std::vector<double> s(dim);
  std::vector<double> dir(dim);
  std::vector<double> neg(dim);
  const double scale = std::sqrt(kernels::squared_norm(z)) + blowup;

  HullMembership out;
  std::size_t separated_at = 0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    for (std::size_t i = 0; i < dim; ++i) {
      d[i] = y[i] - z[i];
      neg[i] = -d[i];
    }
    oracle(neg, s);
    for (double& v : s) v *= blowup;
    const double dist2 = kernels::squared_norm(d);
    const double fw_gap = kernels::dot(d, y) - kernels::dot(d, s);
    out.distance = std::sqrt(dist2);
    out.gap = fw_gap;

    // u = z - y separates when <u, z> > <u, s> = max over the hull. Once
    // separated, iterate on to sharpen the direction toward the projection.
    if (dist2 > 0.0) {
      const double margin = (dist2 - fw_gap) / out.distance;
      if (margin > 1e-12 * scale && margin > out.margin) {
        if (out.verdict != HullVerdict::outside) separated_at = it;
        out.verdict = HullVerdict::outside;
        out.margin = margin;
        out.separating_direction.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) out.separating_direction[i] = neg[i] / out.distance;
      }
    }
    if (fw_gap <= options.gap_tolerance ||
        (out.verdict == HullVerdict::outside &&
         (fw_gap <= kSharpenTolerance * dist2 || it >= separated_at + kSharpenIterations))) {
      if (out.verdict != HullVerdict::outside) out.verdict = HullVerdict::member;
      return out;
    }

    // Away atom: the active vertex with the largest <d, a>.
    std::size_t away = 0;
    double away_value = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a) {
      const double v = kernels::dot(d, active[a].point);
      if (v > away_value) {
        away_value = v;
        away = a;
      }
    }
    const double away_gap = away_value - kernels::dot(d, y);

    bool toward = fw_gap >= away_gap;
    double gamma_max = 1.0;
    if (toward) {
      for (std::size_t i = 0; i < dim; ++i) dir[i] = s[i] - y[i];
    } else {
      const double w = active[away].weight;
      if (w >= 1.0) {
        toward = true;
        for (std::size_t i = 0; i < dim; ++i) dir[i] = s[i] - y[i];
      } else {
        for (std::size_t i = 0; i < dim; ++i) dir[i] = y[i] - active[away].point[i];
        gamma_max = w / (1.0 - w);
      }
    }
    const double dir2 = kernels::squared_norm(dir);
    if (dir2 == 0.0) {
      if (out.verdict != HullVerdict::outside) out.verdict = HullVerdict::member;
      return out;
    }
    const double gamma = std::clamp(-kernels::dot(d, dir) / dir2, 0.0, gamma_max);

    if (toward) {
      for (auto& a : active) a.weight *= 1.0 - gamma;
      auto same = std::find_if(active.begin(), active.end(),
                               [&](const Atom& a) { return a.point == s; });
      if (same != active.end())
        same->weight += gamma;
      else
        active.push_back({s, gamma});
    } else {
      for (auto& a : active) a.weight *= 1.0 + gamma;
      active[away].weight -= gamma;
      if (gamma >= gamma_max) active.erase(active.begin() + static_cast<std::ptrdiff_t>(away));
    }
    std::erase_if(active, [](const Atom& a) { return a.weight <= 0.0; });

    std::fill(y.begin(), y.end(), 0.0);
    for (const auto& a : active) kernels::axpy(a.weight, a.point, y);
  }
  return out;
}

}  // namespace

LinearOracle sparse_ball_oracle(std::size_t m) {
  require(m >= 1, "sparse_ball_oracle: m must be positive");
  return [m](std::span<const double> direction, std::span<double> out) {
    const auto r = rearrangement(direction);
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t keep = std::min(m, direction.size());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < keep; ++i) norm2 += r.values[i] * r.values[i];
    if (norm2 == 0.0) return;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < keep; ++i) {
      const std::size_t j = r.permutation[i];
      out[j] = direction[j] * inv;
    }
  };
}

HullMembership hull_membership(std::span<const double> z, const PointSet& points, double blowup,
                               const HullOptions& options) {
  require(!points.empty(), "hull_membership: empty point set");
  require(points.dim() == z.size(), "hull_membership: dimension mismatch");
  require(blowup > 0.0, "hull_membership: blowup must be positive");
  auto oracle = [&points](std::span<const double> direction, std::span<double> out) {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double v = kernels::dot(direction, points[i]);
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
    std::copy(points[best].begin(), points[best].end(), out.begin());
  };
  // Start from the point nearest to z / blowup.
  std::vector<double> target(z.begin(), z.end());
  for (double& v : target) v /= blowup;
  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = kernels::squared_distance(points[i], target);
    if (d2 < best) {
      best = d2;
      start = i;
    }
  }
  return away_step_frank_wolfe(z, oracle, blowup,
                               std::vector<double>(points[start].begin(), points[start].end()),
                               options);
}

HullMembership hull_membership(std::span<const double> z, const LinearOracle& oracle,
                               double blowup, const HullOptions& options) {
  require(blowup > 0.0, "hull_membership: blowup must be positive");
  std::vector<double> start(z.size());
  oracle(z, start);
  return away_step_frank_wolfe(z, oracle, blowup, std::move(start), options);
}

}  // namespace ripl
