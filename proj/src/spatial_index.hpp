#pragma once

// Fixed-radius neighbour queries over a growing PointSet. Low dimensions use
// a hash grid with cells of twice the query radius, so a ball of that radius
// meets at most 2^dim cells; higher dimensions scan every point.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ripl/kernels.hpp"
#include "ripl/point_set.hpp"
#include "ripl/rng.hpp"

namespace ripl::detail {

struct Neighbour {
  std::size_t index = 0;
  double distance = 0.0;
};

class SpatialIndex {
 public:
  static constexpr std::size_t kGridMaxDim = 8;

  SpatialIndex(const PointSet& points, double radius)
      : points_(points), dim_(points.dim()), cell_(2.0 * radius), grid_(dim_ <= kGridMaxDim) {}

  // Index every point currently in the set.
  void insert_all() {
    for (std::size_t i = indexed_; i < points_.size(); ++i) insert(i);
  }

  void insert(std::size_t i) {
    indexed_ = std::max(indexed_, i + 1);
    if (grid_) cells_[key(points_[i])].push_back(static_cast<std::uint32_t>(i));
  }

  // Nearest indexed point with distance <= radius (at most the radius the
  // index was built for).
  std::optional<Neighbour> nearest_within(std::span<const double> q, double radius) const {
    const double r2 = radius * radius;
    std::optional<Neighbour> best;
    double best2 = std::numeric_limits<double>::infinity();
    auto consider = [&](std::size_t i) {
      const double d2 = kernels::squared_distance(points_[i], q);
      if (d2 <= r2 && (d2 < best2 || (d2 == best2 && best && i < best->index))) {
        best2 = d2;
        best = Neighbour{i, 0.0};
      }
    };
    if (!grid_) {
      for (std::size_t i = 0; i < indexed_; ++i) consider(i);
    } else {
      std::int64_t base[kGridMaxDim];
      std::int64_t step[kGridMaxDim];
      for (std::size_t d = 0; d < dim_; ++d) {
        const double t = q[d] / cell_;
        base[d] = static_cast<std::int64_t>(std::floor(t));
        step[d] = t - std::floor(t) < 0.5 ? -1 : 1;
      }
      std::int64_t cell[kGridMaxDim];
      for (std::size_t mask = 0; mask < (std::size_t{1} << dim_); ++mask) {
        for (std::size_t d = 0; d < dim_; ++d) cell[d] = base[d] + ((mask >> d) & 1 ? step[d] : 0);
        const auto it = cells_.find(hash(cell));
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) consider(i);
      }
    }
    if (best) best->distance = std::sqrt(best2);
    return best;
  }

  bool any_within(std::span<const double> q, double radius) const {
    return nearest_within(q, radius).has_value();
  }

  // Nearest indexed point overall (full scan).
  Neighbour nearest(std::span<const double> q) const {
    Neighbour best{0, std::numeric_limits<double>::infinity()};
    double best2 = best.distance;
    for (std::size_t i = 0; i < indexed_; ++i) {
      const double d2 = kernels::squared_distance(points_[i], q);
      if (d2 < best2) {
        best2 = d2;
        best.index = i;
      }
    }
    best.distance = std::sqrt(best2);
    return best;
  }

 private:
  std::uint64_t key(std::span<const double> x) const {
    std::int64_t c[kGridMaxDim];
    for (std::size_t d = 0; d < dim_; ++d)
      c[d] = static_cast<std::int64_t>(std::floor(x[d] / cell_));
    return hash(c);
  }

  std::uint64_t hash(const std::int64_t* c) const {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (std::size_t d = 0; d < dim_; ++d) h = mix64(h ^ static_cast<std::uint64_t>(c[d]));
    return h;
  }

  const PointSet& points_;
  std::size_t dim_;
  double cell_;
  bool grid_;
  std::size_t indexed_ = 0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace ripl::detail
