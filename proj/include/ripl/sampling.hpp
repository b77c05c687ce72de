#pragma once

// Uniform samplers on spheres and balls, driven by a CounterRng.

#include <cmath>
#include <span>

#include "ripl/kernels.hpp"
#include "ripl/rng.hpp"

namespace ripl {

// Normalized Gaussian vector.
inline void sample_sphere(CounterRng& rng, std::span<double> out) {
  for (;;) {
    for (double& v : out) v = rng.normal();
    const double norm2 = kernels::squared_norm(out);
    if (norm2 > 1e-300) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& v : out) v *= inv;
      return;
    }
  }
}

// Sphere sample scaled by U^(1/dim).
inline void sample_ball(CounterRng& rng, std::span<double> out) {
  sample_sphere(rng, out);
  const double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(out.size()));
  for (double& v : out) v *= r;
}

}  // namespace ripl
