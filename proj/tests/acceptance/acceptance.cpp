// Acceptance runner: one PASS/FAIL line per criterion.
//
//   ripl_acceptance            run every criterion
//   ripl_acceptance 3 8        run the listed criteria
//
// Exit status is 0 iff every selected criterion passed within its time limit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../support/oracles.hpp"
#include "../support/vertex_oracle.hpp"
#include "ripl/concentration.hpp"
#include "ripl/ensembles.hpp"
#include "ripl/geometry.hpp"
#include "ripl/nets.hpp"
#include "ripl/recon.hpp"
#include "ripl/rng.hpp"
#include "ripl/sampling.hpp"
#include "ripl/spectral.hpp"

using namespace ripl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

EnsembleSpec make_spec(EnsembleKind kind, std::size_t n, std::size_t k, std::uint64_t seed) {
  EnsembleSpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.k = k;
  spec.seed = seed;
  return spec;
}

BallDescriptor l1_ball(std::size_t n) {
  BallDescriptor b;
  b.family = BallFamily::l1;
  b.dim = n;
  b.radius = 1.0;
  return b;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------------------

Outcome net_cardinality() {
  std::size_t worst_dim = 0;
  double worst_ratio = 0.0, min_gap = INFINITY;
  bool pass = true;
  NetOptions greedy_only;
  greedy_only.cover_probes = 0;
  for (std::size_t dim = 1; dim <= 6; ++dim) {
    for (double eps : {0.25, 0.5, 1.0}) {
      const Net net = greedy_separated_net(dim, eps, NetAmbient::ball, 100 + dim, greedy_only);
      const double bound = separated_net_bound(dim, eps);
      const double size = static_cast<double>(net.points.size());
      const double sep = min_pairwise_distance(net.points);
      pass = pass && size <= bound && sep > eps;
      min_gap = std::min(min_gap, sep - eps);
      if (size / bound > worst_ratio) {
        worst_ratio = size / bound;
        worst_dim = dim;
      }
    }
  }
  return {pass, fmt("max size/bound %.4f (dim %zu), min separation margin %.3g", worst_ratio,
                    worst_dim, min_gap)};
}

Outcome hull_residual() {
  bool pass = true;
  double worst = 0.0;
  std::size_t targets = 0;
  NetOptions saturated;
  saturated.cover_probes = 100000;
  for (std::size_t dim = 1; dim <= 4; ++dim) {
    for (double eps : {0.3, 0.5}) {
      const Net net = greedy_separated_net(dim, eps, NetAmbient::ball, 200 + dim, saturated);
      const double bound = std::pow(eps, 20.0);
      std::vector<double> z(dim);
      for (std::uint64_t t = 0; t < 100; ++t) {
        CounterRng rng(300 + dim, t);
        sample_ball(rng, z);
        const HullDecomposition h = hull_decompose(z, net, 20);
        pass = pass && h.residual_norm <= bound + 1e-14;
        worst = std::max(worst, h.residual_norm / bound);
        ++targets;
      }
    }
  }
  return {pass, fmt("%zu targets, max residual / eps^20 = %.3g", targets, worst)};
}

Outcome rip_oracles() {
  bool pass = true;
  double grid_gap = 0.0, mc_gap = 0.0;
  for (EnsembleKind kind : {EnsembleKind::bernoulli, EnsembleKind::gaussian}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const MeasurementMatrix m = generate(make_spec(kind, 12, 6, 400 + seed));
      for (std::size_t s = 1; s <= 3; ++s) {
        const RipReport exact = rip_exact(m, s);
        const auto [lo, hi] = oracle::grid_rip_extremes(m, s, s == 3 ? 40000 : 4000);
        const double grid_theta = std::max({0.0, 1.0 - lo, hi - 1.0});
        std::size_t supports = 1;
        for (std::size_t i = 0; i < s; ++i) supports = supports * (12 - i) / (i + 1);
        const RipReport mc = rip_monte_carlo(m, s, supports, seed, SupportSampling::stratified);
        grid_gap = std::max(grid_gap, std::fabs(grid_theta - exact.theta));
        mc_gap = std::max(mc_gap, std::fabs(mc.theta - exact.theta));
      }
    }
  }
  pass = grid_gap <= 1e-3 && mc_gap <= 1e-12;
  return {pass, fmt("max |grid - exact| %.3g (tol 1e-3), max |exhaustive mc - exact| %.3g (tol 1e-12)",
                    grid_gap, mc_gap)};
}

Outcome uup_scaling() {
  constexpr std::size_t n = 512, trials = 2000;
  constexpr double theta = 0.5;
  std::vector<double> log_k, log_plain, log_lambda, log_m;
  std::string medians;
  for (std::size_t k : {32u, 64u, 128u, 256u}) {
    std::vector<double> ms;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, n, k, seed));
      // Supports of one trial are nested in the sparsity, so theta is monotone
      // and bisection finds the largest passing sparsity.
      auto ok = [&](std::size_t s) { return rip_monte_carlo(m, s, trials, 7000 + seed).theta <= theta; };
      std::size_t lo = 0, hi = 1;
      while (hi <= k && ok(hi)) {
        lo = hi;
        hi *= 2;
      }
      hi = std::min(hi, k + 1);
      while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (ok(mid) ? lo : hi) = mid;
      }
      ms.push_back(static_cast<double>(lo));
    }
    const double med = median(ms);
    medians += fmt("%s%g", medians.empty() ? "" : ",", med);
    const double kd = static_cast<double>(k);
    log_k.push_back(std::log(kd));
    log_plain.push_back(std::log(kd / std::log(static_cast<double>(n) / kd)));
    log_lambda.push_back(std::log(kd / uup_lambda(n, k, theta)));
    log_m.push_back(std::log(std::max(med, 0.5)));
  }
  const double slope = ls_slope(log_lambda, log_m);
  return {slope >= 0.7 && slope <= 1.3,
          fmt("median m* = {%s}; exponent vs k/lambda %.3f (vs k/log(n/k) %.3f, vs k %.3f)",
              medians.c_str(), slope, ls_slope(log_plain, log_m), ls_slope(log_k, log_m))};
}

Outcome gaussian_ks() {
  bool pass = true;
  std::string detail;
  std::vector<double> x(32);
  CounterRng rng(500, 0);
  sample_sphere(rng, x);
  for (std::size_t k : {4u, 16u}) {
    const KsResult r = chi_square_ks(make_spec(EnsembleKind::gaussian, 32, k, 0), x, 100000, 501 + k);
    pass = pass && r.pass;
    detail += fmt("k=%zu D=%.5f (crit %.5f) ", k, r.statistic, r.critical);
  }
  return {pass, detail};
}

Outcome truncation() {
  constexpr std::size_t n = 2048;
  std::size_t violations = 0, checked = 0;
  double worst = 0.0;
  std::vector<double> x(n);
  for (double p : {0.5, 0.75, 1.0}) {
    for (double delta : {0.1, 1.0 / 1600.0}) {
      for (std::size_t m : {1u, 3u}) {
        const double radius = std::pow(static_cast<double>(m), 1.0 / p - 0.5);
        CounterRng rng(600 + m, static_cast<std::uint64_t>(p * 1000.0 + 1.0 / delta));
        for (int t = 0; t < 1000; ++t) {
          sample_weak_lp_sphere(rng, p, radius, x);
          const TruncationResult r = truncation_cover_point(x, p, m, delta);
          if (r.error > r.bound) ++violations;
          worst = std::max(worst, r.error / r.bound);
          ++checked;
        }
      }
    }
  }
  return {violations == 0, fmt("%zu points, %zu violations, max error/bound %.4f", checked, violations, worst)};
}

Outcome inclusions() {
  bool pass = true;
  std::size_t settings = 0, violations = 0;
  double worst_block = 0.0;
  const std::pair<std::size_t, std::size_t> shapes[] = {{6, 2}, {12, 3}, {64, 4}};
  for (const auto& [n, m] : shapes) {
    for (double p : {0.5, 0.75}) {
      const InclusionResult r = hull_inclusion_check(InclusionSet::weak_lp, n, m, p, 100000, 700 + n);
      pass = pass && r.pass && r.violations == 0 && r.probes == 100000;
      violations += r.violations;
      worst_block = std::max(worst_block, r.max_block_norm);
      ++settings;
    }
    const InclusionResult r = hull_inclusion_check(InclusionSet::l1, n, m, 0.0, 100000, 710 + n);
    pass = pass && r.pass && r.violations == 0 && r.probes == 100000;
    violations += r.violations;
    worst_block = std::max(worst_block, r.max_block_norm);
    ++settings;
  }

  // Frank-Wolfe verdicts against the exact gauge at n <= 6, on probes and on
  // probes rescaled to gauge 1.9 and 2.1.
  std::size_t compared = 0, disagreements = 0;
  for (std::size_t n : {4u, 6u}) {
    const std::size_t m = 2;
    const LinearOracle oracle = sparse_ball_oracle(m);
    std::vector<double> z(n);
    for (std::uint64_t t = 0; t < 60; ++t) {
      CounterRng rng(720 + n, t);
      if (t % 3 == 2)
        sample_l1_l2(rng, m, z);
      else
        sample_weak_lp(rng, t % 3 ? 0.75 : 0.5, dual_bound_radius(t % 3 ? 0.75 : 0.5, m), true, z);
      const double gauge = sparse_hull_gauge(z, m);
      if (gauge == 0.0) continue;
      for (double target : {gauge, 1.9, 2.1}) {
        if (std::fabs(target - 2.0) <= 1e-6) continue;
        std::vector<double> y(z);
        for (double& v : y) v *= target / gauge;
        const HullMembership h = hull_membership(y, oracle, 2.0);
        const bool expected = target < 2.0;
        const bool agrees = expected ? h.inside() : h.verdict == HullVerdict::outside;
        if (!agrees) ++disagreements;
        ++compared;
      }
    }
  }
  pass = pass && disagreements == 0;
  return {pass, fmt("%zu settings x 1e5 probes, %zu violations, max block norm %.4f; "
                    "Frank-Wolfe %zu/%zu agree with the exact gauge",
                    settings, violations, worst_block, compared - disagreements, compared)};
}

Outcome kernel_sandwich() {
  const BallDescriptor ball = l1_ball(32);
  std::size_t certified = 0, inverted = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 32, 16, 800 + seed));
    const RadiusCertificate c = certify_kernel_radius(m, ball, 0.5, seed);
    if (!c.certified) continue;
    ++certified;
    const double lower = kernel_diameter_lower(m, ball, 16, seed);
    if (lower > 2.0 * c.rho) ++inverted;
    worst_ratio = std::max(worst_ratio, lower / (2.0 * c.rho));
  }

  const BallDescriptor small = l1_ball(8);
  double oracle_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EnsembleKind kind = seed % 2 ? EnsembleKind::bernoulli : EnsembleKind::gaussian;
    const MeasurementMatrix m = generate(make_spec(kind, 8, 4, 900 + seed));
    oracle_gap = std::max(oracle_gap, std::fabs(kernel_diameter_lower(m, small, 16, seed) -
                                                oracle::vertex_diameter(m)));
  }
  const bool pass = certified > 0 && inverted == 0 && oracle_gap <= 1e-6;
  return {pass, fmt("%zu/50 certified, %zu with lower > 2 rho, max lower/(2 rho) %.4f; "
                    "n=8 vertex oracle gap %.3g (tol 1e-6)",
                    certified, inverted, worst_ratio, oracle_gap)};
}

Outcome error_exponent() {
  bool pass = true;
  std::string detail;
  for (double p : {0.5, 1.0}) {
    ReconSweepConfig config;
    config.ensemble = make_spec(EnsembleKind::gaussian, 256, 32, 0);
    config.ball = p < 1.0 ? BallDescriptor::weak(256, p, 1.0) : l1_ball(256);
    config.seed_lo = 50;
    config.seed_hi = 100;
    config.k_list = {32, 64, 128};
    const std::vector<ReconRow> rows = recon_sweep(config);
    const double slope = error_exponent_fit(rows).slope;
    const ErrorBoundConstants constants = fitted_error_bound_constants(config.ball);
    const auto within = std::count_if(rows.begin(), rows.end(), [&](const ReconRow& r) {
      return r.error <= reconstruction_error_bound(256, r.k, p, constants);
    });
    const double target = -(1.0 / p - 0.5);
    const bool ok = std::fabs(slope - target) <= 0.4;
    pass = pass && ok;

    // Exponent once the logarithmic factor of the rate is divided out.
    std::vector<double> x, y;
    for (std::size_t k : config.k_list) {
      std::vector<double> errs;
      for (const ReconRow& r : rows)
        if (r.k == k) errs.push_back(r.error);
      const double kd = static_cast<double>(k);
      x.push_back(std::log(std::log(std::exp(1.0) * 256.0 / kd) / kd));
      y.push_back(std::log(median(errs)));
    }
    detail += fmt("p=%g slope %.3f (target %.2f +- 0.4, %s; exponent on log(e n/k)/k %.3f; "
                  "%zu/%zu rows within the fitted bound) ",
                  p, slope, target, ok ? "in window" : "outside window", ls_slope(x, y),
                  static_cast<std::size_t>(within), rows.size());
  }
  return {pass, detail};
}

Outcome l1_oracle() {
  double worst = 0.0;
  const EnsembleKind kinds[] = {EnsembleKind::gaussian, EnsembleKind::bernoulli};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 6 + seed % 7, k = 2 + seed % 5;
    const MeasurementMatrix m = generate(make_spec(kinds[seed % 2], n, k, 5000 + seed));
    CounterRng rng(seed, 17);
    std::vector<double> t0(n, 0.0);
    for (std::size_t j = 0; j < 3; ++j) t0[rng.below(n)] += rng.normal();
    std::vector<double> b(k);
    m.apply(t0, b);
    const double exact = l1_minimize(m, b, L1Mode::exact).objective;
    const double iter = l1_minimize(m, b, L1Mode::iterative).objective;
    worst = std::max(worst, std::fabs(exact - iter));
  }
  return {worst <= 1e-6, fmt("100 instances, max objective gap %.3g (tol 1e-6)", worst)};
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("ripl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  struct Job {
    std::string name;
    std::string args;  // {out} expands to the output directory
  };
  const std::vector<Job> jobs = {
      {"gen", "gen --kind bernoulli --n 64 --k 32 --seed 3 --output {out}/m.bin"},
      {"gen-csv", "gen --kind gaussian --n 16 --k 8 --seed 4 --normalization row-normalized --format csv "
                  "--output {out}/m.csv"},
      {"rip", "rip --kind gaussian --n 16 --k 8 --seed 1 --sparsity 1,2,3 --output {out}/r.csv"},
      {"rip-mc", "rip --kind bernoulli --n 40 --k 20 --seed 2 --sparsity 2,4 --method monte-carlo "
                 "--trials 300 --output {out}/r.csv"},
      {"uup", "uup --kind bernoulli --n 32 --k 16 --seeds 0,12 --output {out}/u.csv"},
      {"recon", "recon --kind gaussian --n 32 --ball weak-lp --p 0.5 --seeds 0,4 --k-list 8,16 "
                "--output {out}/e.csv"},
      {"recon-certify", "recon --kind bernoulli --n 12 --ball l1 --t0-model sparse --sparsity 2 "
                        "--certify true --seeds 0,3 --k-list 10 --output {out}/e.csv"},
      {"nets", "nets --dim 1,2,3 --epsilon 0.5,1 --ambient sphere --output {out}/n.json --table {out}/t.csv"},
      {"nets-sparse", "nets --dim 8 --epsilon 0.5 --sparse-m 2 --output {out}/n.json --table {out}/t.csv"},
  };
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  for (const Job& job : jobs) {
    std::vector<fs::path> dirs;
    bool ran = true;
    for (int threads : {1, 4}) {
      const fs::path dir = root / job.name / std::to_string(threads);
      fs::create_directories(dir);
      std::string args = job.args;
      for (std::size_t at; (at = args.find("{out}")) != std::string::npos;) args.replace(at, 5, dir.string());
      const std::string cmd = std::string(RIPL_CLI_PATH) + " --threads " + std::to_string(threads) + " " +
                              args + " > " + (root / job.name / ("stdout" + std::to_string(threads) + ".txt")).string() + " 2>&1";
      ran = ran && std::system(cmd.c_str()) == 0;
      dirs.push_back(dir);
    }
    if (!ran) {
      mismatched.push_back(job.name + " (failed to run)");
      continue;
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const fs::path other = dirs[1] / entry.path().filename();
      ++files;
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
        mismatched.push_back(job.name + "/" + entry.path().filename().string());
    }
  }
  fs::remove_all(root);
  std::string detail = fmt("%zu commands, %zu data files compared, threads 1 vs 4", jobs.size(), files);
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty() && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "net cardinality", 10.0, net_cardinality},
      {2, "hull decomposition", 10.0, hull_residual},
      {3, "rip oracle equivalence", 60.0, rip_oracles},
      {4, "uup scaling law", 600.0, uup_scaling},
      {5, "gaussian exactness", 120.0, gaussian_ks},
      {6, "truncation bound", 30.0, truncation},
      {7, "sparse hull inclusions", 120.0, inclusions},
      {8, "kernel diameter sandwich", 300.0, kernel_sandwich},
      {9, "reconstruction error exponent", 900.0, error_exponent},
      {10, "l1 solver oracle", 120.0, l1_oracle},
      {11, "cli determinism", 60.0, cli_determinism},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  bool all = true;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("criterion %2d %-30s %s  [%.1f s / limit %.0f s%s]  %s\n", c.id, c.name, pass ? "PASS" : "FAIL",
                seconds, c.limit_seconds, in_time ? "" : ", over time", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
