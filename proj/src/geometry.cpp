#include "ripl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ripl/errors.hpp"
#include "ripl/kernels.hpp"
#include "ripl/parallel.hpp"
#include "ripl/sampling.hpp"

namespace ripl {

namespace {

bool within(double value, double limit) {
  return value <= limit * (1.0 + kMembershipSlack);
}

std::size_t support_size(std::span<const double> x) {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double v) { return v != 0.0; }));
}

void random_permutation(CounterRng& rng, std::vector<std::size_t>& perm, std::size_t prefix) {
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < prefix; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(perm.size() - i));
    std::swap(perm[i], perm[j]);
  }
}

// Pulls w into B_2: onto the sphere or to a uniform fraction of that.
void clip_into_unit_ball(CounterRng& rng, std::span<double> w) {
  const double norm = std::sqrt(kernels::squared_norm(w));
  if (norm <= 1.0) return;
  const double scale = (rng.uniform() < 0.5 ? 1.0 : rng.uniform()) / norm;
  for (double& v : w) v *= scale;
}

double dot(std::span<const double> a, std::span<const double> b) { return kernels::dot(a, b); }

}  // namespace

std::string to_string(BallFamily family) {
  switch (family) {
    case BallFamily::lp: return "lp";
    case BallFamily::weak_lp: return "weak-lp";
    case BallFamily::l1: return "l1";
    case BallFamily::l2: return "l2";
    case BallFamily::sparse_sphere: return "sparse-sphere";
    case BallFamily::sparse_ball: return "sparse-ball";
  }
  return "unknown";
}

BallFamily ball_family_from_string(const std::string& name) {
  for (auto f : {BallFamily::lp, BallFamily::weak_lp, BallFamily::l1, BallFamily::l2,
                 BallFamily::sparse_sphere, BallFamily::sparse_ball}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument("unknown ball family '" + name + "'");
}

BallDescriptor BallDescriptor::euclidean_ball(std::size_t dim, double radius) {
  BallDescriptor b;
  b.family = BallFamily::l2;
  b.dim = dim;
  b.radius = radius;
  b.validate();
  return b;
}

BallDescriptor BallDescriptor::sphere(std::size_t dim, double radius) {
  return sparse(BallFamily::sparse_sphere, dim, dim, radius);
}

BallDescriptor BallDescriptor::sparse(BallFamily family, std::size_t dim, std::size_t m,
                                      double radius) {
  require(family == BallFamily::sparse_sphere || family == BallFamily::sparse_ball,
          "BallDescriptor::sparse: not a sparse family");
  BallDescriptor b;
  b.family = family;
  b.dim = dim;
  b.sparsity = m;
  b.radius = radius;
  b.validate();
  return b;
}

BallDescriptor BallDescriptor::weak(std::size_t dim, double p, double radius) {
  BallDescriptor b;
  b.family = BallFamily::weak_lp;
  b.dim = dim;
  b.p = p;
  b.radius = radius;
  b.validate();
  return b;
}

void BallDescriptor::validate() const {
  require(dim >= 1, "ball: dimension must be positive");
  require(radius > 0.0 && std::isfinite(radius), "ball: radius must be positive");
  if (family == BallFamily::lp || family == BallFamily::weak_lp)
    require(p > 0.0 && p <= 2.0, "ball: p must lie in (0, 2]");
  if (family == BallFamily::sparse_sphere || family == BallFamily::sparse_ball)
    require(sparsity >= 1 && sparsity <= dim, "ball: sparsity must lie in [1, dim]");
}

bool member(std::span<const double> x, const BallDescriptor& ball) {
  ball.validate();
  require(x.size() == ball.dim, "member: dimension mismatch");
  switch (ball.family) {
    case BallFamily::lp: {
      double s = 0.0;
      for (double v : x) s += std::pow(std::fabs(v), ball.p);
      return within(s, std::pow(ball.radius, ball.p));
    }
    case BallFamily::weak_lp:
      return within(weak_lp_quasinorm(x, ball.p), ball.radius);
    case BallFamily::l1:
      return within(kernels::l1_norm(x), ball.radius);
    case BallFamily::l2:
      return within(std::sqrt(kernels::squared_norm(x)), ball.radius);
    case BallFamily::sparse_sphere: {
      if (support_size(x) > ball.sparsity) return false;
      const double norm = std::sqrt(kernels::squared_norm(x));
      return std::fabs(norm - ball.radius) <= kMembershipSlack * ball.radius * 100.0;
    }
    case BallFamily::sparse_ball:
      return support_size(x) <= ball.sparsity &&
             within(std::sqrt(kernels::squared_norm(x)), ball.radius);
  }
  return false;
}

Rearrangement rearrangement(std::span<const double> x) {
  Rearrangement r;
  r.permutation.resize(x.size());
  std::iota(r.permutation.begin(), r.permutation.end(), std::size_t{0});
  std::stable_sort(r.permutation.begin(), r.permutation.end(),
                   [&](std::size_t a, std::size_t b) { return std::fabs(x[a]) > std::fabs(x[b]); });
  r.values.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.values[i] = std::fabs(x[r.permutation[i]]);
  return r;
}

double top_m_l2(std::span<const double> x, std::size_t m) {
  require(m >= 1 && m <= x.size(), "top_m_l2: m must lie in [1, n]");
  std::vector<double> mag(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::fabs(x[i]);
  std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(m - 1), mag.end(),
                   std::greater<>());
  std::sort(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(m), std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += mag[i] * mag[i];
  return std::sqrt(s);
}

double weak_lp_quasinorm(std::span<const double> x, double p) {
  require(p > 0.0, "weak_lp_quasinorm: p must be positive");
  const auto r = rearrangement(x);
  double q = 0.0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (r.values[i] == 0.0) break;
    q = std::max(q, std::pow(static_cast<double>(i + 1), 1.0 / p) * r.values[i]);
  }
  return q;
}

double block_norm(std::span<const double> x, std::size_t m) {
  require(m >= 1, "block_norm: m must be positive");
  const auto r = rearrangement(x);
  double total = 0.0;
  for (std::size_t start = 0; start < r.values.size(); start += m) {
    double s = 0.0;
    for (std::size_t i = start; i < std::min(start + m, r.values.size()); ++i)
      s += r.values[i] * r.values[i];
    total += std::sqrt(s);
  }
  return total;
}

double sparse_hull_gauge(std::span<const double> x, std::size_t m) {
  require(m >= 1, "sparse_hull_gauge: m must be positive");
  const auto a = rearrangement(x).values;
  const std::size_t d = a.size();
  if (m >= d) return std::sqrt(kernels::squared_norm(x));
  // suffix[i] = a[i] + ... + a[d-1]
  std::vector<double> suffix(d + 1, 0.0);
  for (std::size_t i = d; i-- > 0;) suffix[i] = suffix[i + 1] + a[i];
  auto value = [&](std::size_t r) {
    const std::size_t head = m - r - 1;  // entries kept individually
    double s = 0.0;
    for (std::size_t i = 0; i < head; ++i) s += a[i] * a[i];
    const double tail = suffix[head];
    return std::sqrt(s + tail * tail / static_cast<double>(r + 1));
  };
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t head = m - r - 1;
    const double avg = suffix[head] / static_cast<double>(r + 1);
    const double above = head == 0 ? std::numeric_limits<double>::infinity() : a[head - 1];
    if (above > avg && avg >= a[head]) return value(r);
  }
  return value(m - 1);
}

double dual_bound_radius(double p, std::size_t m) {
  require(p > 0.0 && p < 1.0, "dual bound: p must lie in (0, 1)");
  require(m >= 1, "dual bound: m must be positive");
  return (1.0 / p - 1.0) * std::pow(static_cast<double>(m), 1.0 / p - 0.5);
}

std::vector<double> weak_lp_l2_maximizer(std::span<const double> x, double p, double r) {
  require(p > 0.0 && r > 0.0, "weak_lp_l2_maximizer: p and r must be positive");
  const auto re = rearrangement(x);
  const std::size_t n = x.size();
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = r * std::pow(static_cast<double>(i + 1), -1.0 / p);
  std::size_t active = 0;
  while (active < n && re.values[active] > 0.0) ++active;
  std::vector<double> z(n, 0.0);
  if (active == 0) return z;

  auto mass = [&](double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < active; ++i) {
      const double v = std::min(env[i], mu * re.values[i]);
      s += v * v;
    }
    return s;
  };
  double cap = 0.0;
  for (std::size_t i = 0; i < active; ++i) cap += env[i] * env[i];
  double mu = std::numeric_limits<double>::infinity();
  if (cap > 1.0) {
    double lo = 0.0;
    double hi = 1.0 / std::sqrt(kernels::squared_norm(re.values));
    while (mass(hi) < 1.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mass(mid) <= 1.0)
        lo = mid;
      else
        hi = mid;
    }
    mu = lo;
  }
  for (std::size_t i = 0; i < active; ++i) {
    const std::size_t j = re.permutation[i];
    const double mag = std::min(env[i], mu * re.values[i]);
    z[j] = x[j] < 0.0 ? -mag : mag;
  }
  return z;
}

void sample_weak_lp(CounterRng& rng, double p, double r, bool clip_to_unit_ball,
                    std::span<double> out) {
  const std::size_t n = out.size();
  const bool extremal = rng.uniform() < 0.5;
  std::vector<std::size_t> perm(n);
  random_permutation(rng, perm, n);
  for (std::size_t i = 0; i < n; ++i) {
    double mag = r * std::pow(static_cast<double>(i + 1), -1.0 / p);
    if (!extremal) mag *= rng.uniform();
    out[perm[i]] = rng.uniform() < 0.5 ? -mag : mag;
  }
  if (clip_to_unit_ball) clip_into_unit_ball(rng, out);
}

void sample_weak_lp_sphere(CounterRng& rng, double p, double r, std::span<double> out) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    sample_weak_lp(rng, p, r, false, out);
    const double norm = std::sqrt(kernels::squared_norm(out));
    if (norm < 1.0) continue;
    for (double& v : out) v /= norm;
    return;
  }
  throw NumericalError("sample_weak_lp_sphere: no admissible draw in 10^4 attempts");
}

void sample_l1_l2(CounterRng& rng, std::size_t m, std::span<double> out) {
  BallDescriptor b;
  b.family = BallFamily::l1;
  b.dim = out.size();
  b.radius = std::sqrt(static_cast<double>(m));
  sample_ambient(rng, b, out);
  clip_into_unit_ball(rng, out);
}

void sample_ambient(CounterRng& rng, const BallDescriptor& ball, std::span<double> out) {
  ball.validate();
  require(out.size() == ball.dim, "sample_ambient: dimension mismatch");
  switch (ball.family) {
    case BallFamily::l2:
      sample_ball(rng, out);
      break;
    case BallFamily::l1: {
      // Uniform on the simplex {y >= 0, sum y <= 1} via n + 1 exponentials.
      double total = -std::log(rng.uniform());
      for (double& v : out) {
        v = -std::log(rng.uniform());
        total += v;
      }
      for (double& v : out) v = (rng.uniform() < 0.5 ? -v : v) / total;
      break;
    }
    case BallFamily::sparse_sphere:
    case BallFamily::sparse_ball: {
      std::vector<std::size_t> perm(ball.dim);
      random_permutation(rng, perm, ball.sparsity);
      std::vector<double> local(ball.sparsity);
      if (ball.family == BallFamily::sparse_sphere)
        sample_sphere(rng, local);
      else
        sample_ball(rng, local);
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < ball.sparsity; ++i) out[perm[i]] = local[i];
      break;
    }
    default:
      throw InvalidArgument("sample_ambient: no sampler for family " + to_string(ball.family));
  }
  for (double& v : out) v *= ball.radius;
}

DualBoundResult weak_lp_dual_bound_check(std::span<const double> x, double p, std::size_t m,
                                         std::size_t probes, std::uint64_t seed) {
  require(probes >= 1, "weak_lp_dual_bound_check: need at least one probe");
  require(m >= 1 && m <= x.size(), "weak_lp_dual_bound_check: m must lie in [1, n]");
  const double r = dual_bound_radius(p, m);
  DualBoundResult out;
  out.probes = probes;
  const double denom = 2.0 * top_m_l2(x, m);
  if (denom == 0.0) return out;

  const BallDescriptor weak = BallDescriptor::weak(x.size(), p, r);
  std::vector<double> ratios(probes);
  std::vector<char> accepted(probes);
  parallel_for(probes, [&](std::size_t i) {
    CounterRng rng(seed, i);
    std::vector<double> z(x.size());
    sample_weak_lp(rng, p, r, true, z);
    accepted[i] = member(z, weak) && within(std::sqrt(kernels::squared_norm(z)), 1.0);
    ratios[i] = accepted[i] ? dot(x, z) / denom : 0.0;
  });
  std::size_t kept = 0;
  for (std::size_t i = 0; i < probes; ++i) {
    if (!accepted[i]) continue;
    ++kept;
    out.max_ratio = std::max(out.max_ratio, ratios[i]);
  }
  out.acceptance_rate = static_cast<double>(kept) / static_cast<double>(probes);
  const auto z = weak_lp_l2_maximizer(x, p, r);
  out.extremal_ratio = dot(x, z) / denom;
  out.max_ratio = std::max(out.max_ratio, out.extremal_ratio);
  out.pass = within(out.max_ratio, 1.0);
  return out;
}

InclusionResult hull_inclusion_check(InclusionSet which, std::size_t n, std::size_t m,
                                     double p, std::size_t probes, std::uint64_t seed) {
  require(n >= 1 && m >= 1 && m <= n, "hull_inclusion_check: need 1 <= m <= n");
  require(probes >= 1, "hull_inclusion_check: need at least one probe");
  const double r = which == InclusionSet::weak_lp ? dual_bound_radius(p, m) : 0.0;
  std::vector<double> blocks(probes);
  std::vector<double> gauges(probes);
  parallel_for(probes, [&](std::size_t i) {
    CounterRng rng(seed, i);
    std::vector<double> z(n);
    if (which == InclusionSet::weak_lp) {
      // Every tenth probe is the maximizer of a random linear functional.
      if (i % 10 == 9) {
        std::vector<double> x(n);
        for (double& v : x) v = rng.normal();
        z = weak_lp_l2_maximizer(x, p, r);
      } else {
        sample_weak_lp(rng, p, r, true, z);
      }
    } else {
      sample_l1_l2(rng, m, z);
    }
    blocks[i] = block_norm(z, m);
    gauges[i] = within(blocks[i], 2.0) ? 0.0 : sparse_hull_gauge(z, m);
  });
  InclusionResult out;
  out.probes = probes;
  for (std::size_t i = 0; i < probes; ++i) {
    out.max_block_norm = std::max(out.max_block_norm, blocks[i]);
    if (!within(blocks[i], 2.0)) {
      ++out.witness_failures;
      out.max_gauge = std::max(out.max_gauge, gauges[i]);
      if (!within(gauges[i], 2.0)) ++out.violations;
    }
  }
  out.pass = out.violations == 0;
  return out;
}

double truncation_bound(double p, double delta) {
  require(p > 0.0 && p < 2.0, "truncation: p must lie in (0, 2)");
  require(delta > 0.0, "truncation: delta must be positive");
  return 2.0 / std::sqrt(2.0 / p - 1.0) * std::pow(delta, 1.0 / p - 0.5);
}

TruncationResult truncation_cover_point(std::span<const double> x, double p, std::size_t m,
                                        double delta) {
  TruncationResult out;
  out.bound = truncation_bound(p, delta);
  require(m >= 1, "truncation: m must be positive");
  const std::size_t n = x.size();
  const double radius = std::pow(static_cast<double>(m), 1.0 / p - 0.5);
  require(std::fabs(std::sqrt(kernels::squared_norm(x)) - 1.0) <= 1e-9,
          "truncation: x must be a unit vector");
  require(within(weak_lp_quasinorm(x, p), radius),
          "truncation: x must lie in m^(1/p-1/2) B_{p,inf}");
  const double keep = std::ceil(static_cast<double>(m) / delta);
  out.kept = keep >= static_cast<double>(n) ? n : static_cast<std::size_t>(keep);
  const auto re = rearrangement(x);
  out.z.assign(n, 0.0);
  for (std::size_t i = 0; i < out.kept; ++i) out.z[re.permutation[i]] = x[re.permutation[i]];
  const double norm = std::sqrt(kernels::squared_norm(out.z));
  if (norm == 0.0) throw NumericalError("truncation: truncated vector vanished");
  for (double& v : out.z) v /= norm;
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err += (x[i] - out.z[i]) * (x[i] - out.z[i]);
  out.error = std::sqrt(err);
  return out;
}

QuasiconvexityResult quasiconvexity_constant_check(double p, std::size_t trials,
                                                   std::size_t n, std::uint64_t seed) {
  require(p > 0.0 && p < 1.0, "quasiconvexity: p must lie in (0, 1)");
  require(n >= 1 && trials >= 1, "quasiconvexity: need n >= 1 and trials >= 1");
  const double limit = 2.0 * std::pow(2.0, 1.0 / p);
  std::vector<double> q(trials);
  parallel_for(trials, [&](std::size_t t) {
    CounterRng rng(seed, t);
    std::vector<double> x(n);
    std::vector<double> y(n);
    sample_weak_lp(rng, p, 1.0, false, x);
    // Every fourth pair uses y = x reversed in rank, the worst overlap.
    if (t % 4 == 3) {
      const auto re = rearrangement(x);
      for (std::size_t i = 0; i < n; ++i) y[re.permutation[n - 1 - i]] = std::fabs(x[re.permutation[i]]);
      for (std::size_t i = 0; i < n; ++i)
        if (x[i] < 0.0) y[i] = -y[i];
    } else {
      sample_weak_lp(rng, p, 1.0, false, y);
    }
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = x[i] + y[i];
    q[t] = weak_lp_quasinorm(s, p);
  });
  QuasiconvexityResult out;
  out.trials = trials;
  for (double v : q) {
    out.max_sum_quasinorm = std::max(out.max_sum_quasinorm, v);
    if (!within(v, limit)) ++out.counterexamples;
  }
  out.pass = out.counterexamples == 0;
  return out;
}

double m1_constant(double p) {
  require(p > 0.0 && p < 1.0, "m1: p must lie in (0, 1)");
  const double base = 20.0 * std::pow(2.0, 1.0 / p) / (1.0 / p - 1.0);
  return std::pow(base, 1.0 / (1.0 / p - 0.5));
}

std::size_t compute_m1(double p, std::size_t m) {
  require(m >= 1, "m1: m must be positive");
  const double c = m1_constant(p);
  const double m1 = std::ceil(std::max(c * static_cast<double>(m), static_cast<double>(m)));
  const double q = 1.0 / p - 0.5;
  const double lhs = 10.0 * std::pow(2.0, 1.0 + 1.0 / p) * std::pow(static_cast<double>(m), q);
  const double rhs = (1.0 / p - 1.0) * std::pow(m1, q);
  if (!within(lhs, rhs)) throw NumericalError("m1: defining inequality fails after rounding");
  return static_cast<std::size_t>(m1);
}

void to_json(nlohmann::json& j, const BallDescriptor& b) {
  j = nlohmann::json{{"family", to_string(b.family)}, {"radius", b.radius}, {"dim", b.dim}};
  if (b.family == BallFamily::lp || b.family == BallFamily::weak_lp) j["p"] = b.p;
  if (b.family == BallFamily::sparse_sphere || b.family == BallFamily::sparse_ball)
    j["sparsity"] = b.sparsity;
}

void from_json(const nlohmann::json& j, BallDescriptor& b) {
  b = BallDescriptor{};
  b.family = ball_family_from_string(j.at("family").get<std::string>());
  b.radius = j.value("radius", 1.0);
  b.dim = j.at("dim").get<std::size_t>();
  if (j.contains("p")) b.p = j.at("p").get<double>();
  if (j.contains("sparsity")) b.sparsity = j.at("sparsity").get<std::size_t>();
  b.validate();
}

}  // namespace ripl
