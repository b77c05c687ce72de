#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "../support/vertex_oracle.hpp"
#include "ripl/combinatorics.hpp"
#include "ripl/errors.hpp"
#include "ripl/parallel.hpp"
#include "ripl/recon.hpp"

using namespace ripl;

namespace {

EnsembleSpec make_spec(EnsembleKind kind, std::size_t n, std::size_t k, std::uint64_t seed) {
  EnsembleSpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.k = k;
  spec.seed = seed;
  return spec;
}

BallDescriptor l1_ball(std::size_t n, double radius = 1.0) {
  BallDescriptor b;
  b.family = BallFamily::l1;
  b.dim = n;
  b.radius = radius;
  return b;
}

// sqrt(k) times the first k rows of the n x n identity, with the columns in
// `dropped` zeroed.
MeasurementMatrix scaled_identity(std::size_t k, std::size_t n, std::vector<std::size_t> dropped = {}) {
  std::vector<double> e(k * n, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    if (std::find(dropped.begin(), dropped.end(), i) == dropped.end())
      e[i * n + i] = std::sqrt(static_cast<double>(k));
  return MeasurementMatrix::from_entries(k, n, e);
}

double frobenius(const MeasurementMatrix& m) {
  double s = 0.0;
  for (double v : m.row_major()) s += v * v;
  return std::sqrt(s);
}

double distance(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("kernel basis of identity rows is the complementary coordinates") {
  const MeasurementMatrix m = scaled_identity(3, 7);
  const KernelBasis kb = kernel_basis(m);
  CHECK(kb.dim == 4);
  CHECK(kb.rank == 3);
  // Projector onto the span must be diag(0,0,0,1,1,1,1).
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      double p = 0.0;
      for (std::size_t b = 0; b < kb.dim; ++b) p += kb.basis[b][i] * kb.basis[b][j];
      CHECK(p == doctest::Approx(i == j && i >= 3 ? 1.0 : 0.0).epsilon(0).scale(1).epsilon(1e-12));
    }
}

TEST_CASE("square generic matrices have a trivial kernel") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(kernel_basis(generate(make_spec(EnsembleKind::gaussian, 6, 6, seed))).dim == 0);
    CHECK(kernel_basis(generate(make_spec(EnsembleKind::bernoulli, 5, 5, seed + 10))).dim <= 1);
  }
}

TEST_CASE("kernel basis invariants on random 4 x 8 bernoulli") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 8, 4, seed));
    const KernelBasis kb = kernel_basis(m);
    CHECK(kb.dim + kb.rank == 8);
    CHECK(kb.dim >= 4);
    const double fro = frobenius(m);
    std::vector<double> y(4);
    for (std::size_t a = 0; a < kb.dim; ++a) {
      for (std::size_t b = 0; b < kb.dim; ++b) {
        double dot = 0.0;
        for (std::size_t j = 0; j < 8; ++j) dot += kb.basis[a][j] * kb.basis[b][j];
        CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) <= 1e-10);
      }
      m.apply(kb.basis[a], y);
      double r = 0.0;
      for (double v : y) r += v * v;
      CHECK(std::sqrt(r) <= 1e-9 * fro);
    }
  }
}

TEST_CASE("l1_minimize: zero data gives zero") {
  const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 8, 4, 3));
  const std::vector<double> b(4, 0.0);
  for (L1Mode mode : {L1Mode::exact, L1Mode::iterative}) {
    const L1Solution s = l1_minimize(m, b, mode);
    CHECK(s.objective == 0.0);
    CHECK(s.residual == 0.0);
    CHECK(s.solver == mode);
  }
}

TEST_CASE("l1_minimize: scaled identity rows recover a signal on the measured coordinates") {
  const MeasurementMatrix m = scaled_identity(4, 9);
  const std::vector<double> t0{0.5, -1.25, 0.0, 3.0, 0, 0, 0, 0, 0};
  std::vector<double> b(4);
  m.apply(t0, b);
  for (L1Mode mode : {L1Mode::exact, L1Mode::iterative}) {
    const L1Solution s = l1_minimize(m, b, mode);
    CHECK(distance(s.x, t0) <= 1e-12);
  }
}

TEST_CASE("l1_minimize: iterative matches exact on n=10, k=5 bernoulli with 1-sparse t0") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 10, 5, seed));
    std::vector<double> t0(10, 0.0);
    t0[seed % 10] = seed % 2 ? -1.5 : 0.75;
    std::vector<double> b(5);
    m.apply(t0, b);
    const L1Solution exact = l1_minimize(m, b, L1Mode::exact);
    const L1Solution iter = l1_minimize(m, b, L1Mode::iterative);
    CHECK(std::fabs(exact.objective - iter.objective) <= 1e-6);
    CHECK(iter.converged);
  }
}

TEST_CASE("l1_minimize: iterative matches exact on 100 mixed instances") {
  const EnsembleKind kinds[] = {EnsembleKind::gaussian, EnsembleKind::bernoulli};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 6 + seed % 7, k = 2 + seed % 5;
    const MeasurementMatrix m = generate(make_spec(kinds[seed % 2], n, k, 1000 + seed));
    CounterRng rng(seed, 7);
    std::vector<double> t0(n, 0.0);
    for (std::size_t j = 0; j < 3; ++j) t0[rng.below(n)] += rng.normal();
    std::vector<double> b(k);
    m.apply(t0, b);
    const L1Solution exact = l1_minimize(m, b, L1Mode::exact);
    const L1Solution iter = l1_minimize(m, b, L1Mode::iterative);
    CHECK(std::fabs(exact.objective - iter.objective) <= 1e-6);
    const double tol = 1e-8 * std::max(1.0, std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0)));
    CHECK(exact.residual <= tol);
    CHECK(iter.residual <= tol);
    CHECK(static_cast<std::size_t>(std::count_if(exact.x.begin(), exact.x.end(),
                                                 [](double v) { return v != 0.0; })) <= k);
    CHECK(exact.objective <= std::accumulate(t0.begin(), t0.end(), 0.0,
                                             [](double s, double v) { return s + std::fabs(v); }) +
                                 1e-9);
  }
}

TEST_CASE("l1_minimize errors") {
  // Two equal rows: b must have equal entries.
  const MeasurementMatrix m = MeasurementMatrix::from_entries(2, 3, {1, 2, 3, 1, 2, 3});
  const std::vector<double> b{1.0, 2.0};
  CHECK_THROWS_AS(l1_minimize(m, b, L1Mode::exact), Infeasible);
  CHECK_THROWS_AS(l1_minimize(m, b, L1Mode::iterative), Infeasible);
  const std::vector<double> ok{1.0, 1.0};
  CHECK(l1_minimize(m, ok, L1Mode::exact).objective == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(l1_minimize(m, std::vector<double>{1.0}, L1Mode::exact), InvalidArgument);

  const MeasurementMatrix big = generate(make_spec(EnsembleKind::gaussian, 40, 20, 1));
  CHECK_THROWS_AS(l1_minimize(big, std::vector<double>(20, 1.0), L1Mode::exact), BudgetExceeded);
}

TEST_CASE("kernel_diameter_lower: explicit kernel vector and trivial kernel") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    // Random 4 x 8 with the last column zeroed, so e_8 is in the kernel.
    const MeasurementMatrix g = generate(make_spec(EnsembleKind::gaussian, 8, 4, seed));
    std::vector<double> e(g.row_major().begin(), g.row_major().end());
    for (std::size_t i = 0; i < 4; ++i) e[i * 8 + 7] = 0.0;
    const MeasurementMatrix m = MeasurementMatrix::from_entries(4, 8, e);
    CHECK(kernel_diameter_lower(m, l1_ball(8), 8, seed) >= 2.0 - 1e-6);
    CHECK(kernel_diameter_lower(m, l1_ball(8, 3.0), 8, seed) >= 6.0 - 1e-6);
    CHECK(kernel_diameter_lower(m, BallDescriptor::weak(8, 0.5, 1.0), 8, seed) >= 2.0 - 1e-6);
  }
  const MeasurementMatrix full = generate(make_spec(EnsembleKind::gaussian, 6, 6, 2));
  CHECK(kernel_diameter_lower(full, l1_ball(6), 8, 0) == 0.0);
  CHECK_THROWS_AS(kernel_diameter_lower(full, BallDescriptor::euclidean_ball(6), 8, 0), InvalidArgument);
}

TEST_CASE("kernel_diameter_lower matches the vertex oracle at n=8, k=4") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EnsembleKind kind = seed % 2 ? EnsembleKind::bernoulli : EnsembleKind::gaussian;
    const MeasurementMatrix m = generate(make_spec(kind, 8, 4, 200 + seed));
    const double lower = kernel_diameter_lower(m, l1_ball(8), 16, seed);
    CHECK(std::fabs(lower - oracle::vertex_diameter(m)) <= 1e-6);
  }
}

TEST_CASE("kernel_diameter_lower stays below the ball diameter and is deterministic") {
  const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 32, 16, 5));
  const BallDescriptor weak = BallDescriptor::weak(32, 0.5, 1.0);
  const double a = kernel_diameter_lower(m, l1_ball(32), 16, 9);
  CHECK(a > 0.0);
  CHECK(a <= 2.0 + 1e-12);
  CHECK(a == kernel_diameter_lower(m, l1_ball(32), 16, 9));
  const double w = kernel_diameter_lower(m, weak, 16, 9);
  CHECK(w > 0.0);
  CHECK(w == kernel_diameter_lower(m, weak, 16, 9));
}

TEST_CASE("kernel_diameter_upper: exact isometry certifies") {
  const MeasurementMatrix m = scaled_identity(3, 3);
  for (double rho : {0.5, 0.75}) {
    const RadiusCertificate c = kernel_diameter_upper(m, l1_ball(3), rho, 0.5, 1);
    CHECK(c.route == CertificateRoute::nets);
    CHECK(c.certified);
    CHECK(c.worst_isometry_gap <= 1e-12);
    CHECK(c.worst_expansion <= 1.0 + 1e-12);
    CHECK(c.norm_lower_bound > 0.0);
  }
  const RadiusCertificate w = kernel_diameter_upper(m, BallDescriptor::weak(3, 0.5, 1.0), 0.9, 0.5, 1);
  CHECK(w.certified);
  // Vacuous and exact routes.
  CHECK(kernel_diameter_upper(m, l1_ball(3), 1.5, 0.5, 1).route == CertificateRoute::empty_sphere_section);
  CHECK(kernel_diameter_upper(m, l1_ball(3), 1.5, 0.5, 1).certified);
  CHECK(kernel_diameter_upper(m, l1_ball(3), 1.0, 0.5, 1).route == CertificateRoute::signed_basis);
  CHECK(kernel_diameter_upper(m, l1_ball(3), 1.0, 0.5, 1).certified);
}

TEST_CASE("kernel_diameter_upper: a long kernel vector blocks the certificate") {
  const MeasurementMatrix m = scaled_identity(3, 3, {2});  // e_3 in the kernel
  const double lower = kernel_diameter_lower(m, l1_ball(3), 8, 0);
  CHECK(lower >= 2.0 - 1e-12);
  for (double rho : {0.5, 0.75}) {
    CHECK(lower > 2.0 * rho);
    CHECK_FALSE(kernel_diameter_upper(m, l1_ball(3), rho, 0.5, 1).certified);
  }
  CHECK_FALSE(kernel_diameter_upper(m, l1_ball(3), 1.0, 0.5, 1).certified);
}

TEST_CASE("kernel_diameter_upper: budget and arguments") {
  const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 32, 16, 1));
  CHECK_THROWS_AS(kernel_diameter_upper(m, l1_ball(32), 1.0 / std::sqrt(2.0), 0.5, 1), BudgetExceeded);
  CHECK_THROWS_AS(kernel_diameter_upper(m, l1_ball(32), 0.5, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(kernel_diameter_upper(m, l1_ball(32), 0.0, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(kernel_diameter_upper(m, l1_ball(16), 0.5, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(kernel_diameter_upper(m, BallDescriptor::weak(32, 1.5, 1.0), 0.5, 0.5, 1),
                  InvalidArgument);
}

TEST_CASE("certify_kernel_radius walks down the rho grid") {
  const RadiusCertificate small = certify_kernel_radius(scaled_identity(3, 3), l1_ball(3), 0.5, 1);
  CHECK(small.certified);
  CHECK(small.rho < 1.0);
  // At n = 32 only the signed-basis certificate fits the budget.
  const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 32, 16, 1));
  const RadiusCertificate c = certify_kernel_radius(m, l1_ball(32), 0.5, 1);
  CHECK(c.certified);
  CHECK(c.rho == 1.0);
  CHECK(c.route == CertificateRoute::signed_basis);
  const RadiusCertificate w = certify_kernel_radius(m, BallDescriptor::weak(32, 0.5, 1.0), 0.5, 1);
  CHECK(w.certified);
  CHECK(w.route == CertificateRoute::empty_sphere_section);
}

TEST_CASE("sandwich: lower diameter never exceeds twice a certified radius") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MeasurementMatrix m = generate(make_spec(EnsembleKind::bernoulli, 32, 16, seed));
    const RadiusCertificate c = certify_kernel_radius(m, l1_ball(32), 0.5, seed);
    REQUIRE(c.certified);
    CHECK(kernel_diameter_lower(m, l1_ball(32), 16, seed) <= 2.0 * c.rho);
  }
  const MeasurementMatrix tiny = scaled_identity(3, 3);
  const RadiusCertificate c = certify_kernel_radius(tiny, l1_ball(3), 0.5, 0);
  CHECK(kernel_diameter_lower(tiny, l1_ball(3), 8, 0) <= 2.0 * c.rho);
}

TEST_CASE("draw_signal models") {
  const BallDescriptor l1 = l1_ball(20, 2.0);
  const BallDescriptor weak = BallDescriptor::weak(20, 0.5, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const BallDescriptor* ball : {&l1, &weak}) {
      for (SignalModel model : {SignalModel::sparse, SignalModel::weak_lp_extremal,
                                SignalModel::random_ball, SignalModel::zero}) {
        const std::vector<double> x = draw_signal(*ball, model, 3, seed);
        CHECK(member(x, *ball));
        CHECK(x == draw_signal(*ball, model, 3, seed));
      }
      const std::vector<double> s = draw_signal(*ball, SignalModel::sparse, 3, seed);
      CHECK(std::count_if(s.begin(), s.end(), [](double v) { return v != 0.0; }) == 3);
    }
    const std::vector<double> s = draw_signal(l1, SignalModel::sparse, 3, seed);
    double l1n = 0.0;
    for (double v : s) l1n += std::fabs(v);
    CHECK(l1n == doctest::Approx(2.0).epsilon(1e-12));
    const std::vector<double> e = draw_signal(weak, SignalModel::weak_lp_extremal, 3, seed);
    CHECK(weak_lp_quasinorm(e, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    const Rearrangement r = rearrangement(e);
    for (std::size_t i = 0; i < 20; ++i)
      CHECK(r.values[i] == doctest::Approx(std::pow(i + 1.0, -2.0)).epsilon(1e-12));
  }
  CHECK(signal_model_from_string(to_string(SignalModel::weak_lp_extremal)) ==
        SignalModel::weak_lp_extremal);
  CHECK_THROWS_AS(signal_model_from_string("gaussian"), InvalidArgument);
}

TEST_CASE("recon_experiment: zero signal and certified error") {
  const EnsembleSpec spec = make_spec(EnsembleKind::bernoulli, 32, 16, 4);
  ReconOptions zero;
  zero.model = SignalModel::zero;
  const ReconResult z = recon_experiment(spec, l1_ball(32), 3, zero);
  CHECK(z.error == 0.0);
  CHECK(std::all_of(z.x_hat.begin(), z.x_hat.end(), [](double v) { return v == 0.0; }));

  ReconOptions opts;
  opts.model = SignalModel::sparse;
  opts.sparsity = 2;
  opts.certify = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ReconResult r = recon_experiment(spec, l1_ball(32), seed, opts);
    CHECK(r.error >= 0.0);
    CHECK(r.solver_residual <= 1e-8 * std::max(1.0, std::sqrt(std::inner_product(
                                                        r.b.begin(), r.b.end(), r.b.begin(), 0.0))));
    REQUIRE(r.certified);
    CHECK(r.error <= r.certified_bound);
    CHECK(r.bound > 0.0);
  }
}

TEST_CASE("recon sweep: shape, CSV and thread independence") {
  ReconSweepConfig c;
  c.ensemble = make_spec(EnsembleKind::gaussian, 24, 1, 0);
  c.ball = BallDescriptor::weak(24, 0.5, 1.0);
  c.seed_lo = 3;
  c.seed_hi = 7;
  c.k_list = {6, 12};
  set_max_threads(1);
  const std::vector<ReconRow> one = recon_sweep(c);
  set_max_threads(4);
  const std::vector<ReconRow> four = recon_sweep(c);
  REQUIRE(one.size() == 8);
  CHECK(recon_rows_to_csv(one) == recon_rows_to_csv(four));
  CHECK(one[0].seed == 3);
  CHECK(one[1].k == 12);
  CHECK(one[0].p == 0.5);
  const std::string csv = recon_rows_to_csv(one);
  CHECK(csv.rfind("seed,n,k,p,error,rho,certified,solver_tol\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

  c.seed_hi = c.seed_lo;
  CHECK_THROWS_AS(recon_sweep(c), InvalidArgument);

  nlohmann::json j = c;
  ReconSweepConfig back;
  j.get_to(back);
  CHECK(back.k_list == c.k_list);
  CHECK(back.ball.p == 0.5);
  CHECK(back.options.model == c.options.model);
}

TEST_CASE("error_exponent_fit recovers a planted power law") {
  std::vector<ReconRow> rows;
  for (std::size_t k : {16, 32, 64, 128})
    for (std::uint64_t s = 0; s < 5; ++s) {
      ReconRow r;
      r.k = k;
      r.seed = s;
      r.error = 3.0 * std::pow(static_cast<double>(k), -1.5) * (s == 2 ? 1.0 : (s < 2 ? 0.5 : 2.0));
      rows.push_back(r);
    }
  const SlopeFit f = error_exponent_fit(rows);
  CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("error bound formula") {
  const ErrorBoundConstants c{2.0, 1.0};
  CHECK(reconstruction_error_bound(256, 64, 0.5, c) ==
        doctest::Approx(2.0 * std::pow(std::log(4.0) / 64.0, 1.5)).epsilon(1e-14));
  CHECK(reconstruction_error_bound(256, 64, 1.0, c) ==
        doctest::Approx(2.0 * std::sqrt(std::log(4.0) / 64.0)).epsilon(1e-14));
  CHECK(quasi_convexity_constant(BallDescriptor::weak(4, 0.5, 1.0)) == 4.0);
  CHECK(quasi_convexity_constant(l1_ball(4)) == 1.0);
}
