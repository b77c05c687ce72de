#pragma once

// Counter-based random streams.
//
// A stream is identified by (seed, stream id); its i-th draw is a pure
// function of (seed, stream id, i). Matrix rows, Monte Carlo trials and
// probes each get their own stream, so work can be split across threads or
// reordered without changing any result.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace ripl {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Hash a seed together with a path of integer tags into a new seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0xD1B54A32D192ED03ULL));
  return h;
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_seed(seed, {stream})) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  // Draw number `counter` of this stream, independent of the cursor.
  result_type at(std::uint64_t counter) const {
    return mix64(key_ ^ mix64(counter * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
  }

  result_type operator()() { return at(counter_++); }

  // Uniform on the open interval (0, 1).
  static double to_unit(result_type bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform() { return to_unit((*this)()); }

  double uniform_at(std::uint64_t counter) const { return to_unit(at(counter)); }

  // Box-Muller (cosine branch); consumes two draws.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return box_muller(u1, u2);
  }

  // The j-th normal of the stream, built from draws 2j and 2j+1.
  double normal_at(std::uint64_t j) const {
    return box_muller(uniform_at(2 * j), uniform_at(2 * j + 1));
  }

  // Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = max() - max() % bound;
    for (;;) {
      const std::uint64_t x = (*this)();
      if (x < limit) return x % bound;
    }
  }

  std::uint64_t position() const { return counter_; }

 private:
  static double box_muller(double u1, double u2) {
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ripl
