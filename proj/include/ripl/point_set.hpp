#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ripl/errors.hpp"

namespace ripl {

// Points of R^dim stored contiguously, one after another.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> mutable_point(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> p) {
    require(p.size() == dim_, "PointSet: dimension mismatch");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }

  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

}  // namespace ripl
