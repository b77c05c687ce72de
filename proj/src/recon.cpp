#include "ripl/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ripl/combinatorics.hpp"
#include "ripl/errors.hpp"
#include "ripl/io.hpp"
#include "ripl/kernels.hpp"
#include "ripl/nets.hpp"
#include "ripl/parallel.hpp"
#include "ripl/rng.hpp"
#include "ripl/sampling.hpp"

namespace ripl {

namespace {

constexpr std::uint64_t kMatrixStream = 0x4d415452;  // "MATR"
constexpr std::uint64_t kSignalStream = 0x5349474e;  // "SIGN"
constexpr std::uint64_t kAscentStream = 0x41534345;  // "ASCE"
constexpr std::uint64_t kLambdaStream = 0x4c414d42;  // "LAMB"

constexpr std::size_t kAscentSteps = 200;
constexpr double kAscentStep = 0.5;
constexpr double kAscentDecay = 0.98;
constexpr std::size_t kSwapSearches = 4;
constexpr int kRadiusGridSteps = 40;
// |x - z| relative to |x|; the objective alone can stall early.
constexpr double kConsensusTolerance = 1e-9;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

Matrix to_eigen(const MeasurementMatrix& m) {
  return Eigen::Map<const Matrix>(m.row_major().data(), static_cast<Eigen::Index>(m.rows()),
                                  static_cast<Eigen::Index>(m.cols()));
}

double l1_norm(std::span<const double> x) { return kernels::l1_norm(x); }

double l2_norm(std::span<const double> x) { return std::sqrt(kernels::squared_norm(x)); }

std::size_t numerical_rank(const Vector& sigma) {
  if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
  const double cut = kRankThreshold * sigma(0);
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(sigma.size()) && sigma(static_cast<Eigen::Index>(r)) >= cut) ++r;
  return r;
}

double feasibility_scale(std::span<const double> b) { return std::max(1.0, l2_norm(b)); }

double residual_norm(const MeasurementMatrix& m, std::span<const double> x,
                     std::span<const double> b) {
  std::vector<double> ax(m.rows());
  m.apply(x, ax);
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) s += (ax[i] - b[i]) * (ax[i] - b[i]);
  return std::sqrt(s);
}

// Thin SVD pieces for the affine projection onto {A x = b}.
struct RangeFactor {
  Matrix v;  // n x r, right singular vectors of the nonzero singular values
  Vector least_squares;
  std::size_t rank = 0;
};

RangeFactor range_factor(const MeasurementMatrix& m, std::span<const double> b) {
  const Matrix a = to_eigen(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RangeFactor f;
  f.rank = numerical_rank(svd.singularValues());
  const auto r = static_cast<Eigen::Index>(f.rank);
  f.v = svd.matrixV().leftCols(r);
  const Eigen::Map<const Vector> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  Vector coef = svd.matrixU().leftCols(r).transpose() * bv;
  for (Eigen::Index i = 0; i < r; ++i) coef(i) /= svd.singularValues()(i);
  f.least_squares = f.v * coef;
  return f;
}

L1Solution finish(const MeasurementMatrix& m, std::span<const double> b, std::vector<double> x,
                  L1Mode mode) {
  L1Solution s;
  s.x = std::move(x);
  s.objective = l1_norm(s.x);
  s.residual = residual_norm(m, s.x, b);
  s.solver = mode;
  return s;
}

L1Solution solve_exact(const MeasurementMatrix& m, std::span<const double> b,
                       const RangeFactor& range, const L1Options& options) {
  const std::size_t n = m.cols();
  const std::size_t r = range.rank;
  if (binomial(n, r) > options.support_budget)
    throw BudgetExceeded("l1_minimize: exact mode needs C(" + std::to_string(n) + ", " +
                         std::to_string(r) + ") supports, over the budget");
  const double tol = options.feasibility_tolerance * feasibility_scale(b);
  if (r == 0) return finish(m, b, std::vector<double>(n, 0.0), L1Mode::exact);

  const Matrix a = to_eigen(m);
  const Eigen::Map<const Vector> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  std::vector<std::size_t> support(r);
  std::iota(support.begin(), support.end(), std::size_t{0});
  std::vector<double> best;
  double best_l1 = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(r));
  do {
    for (std::size_t j = 0; j < r; ++j) sub.col(static_cast<Eigen::Index>(j)) = a.col(static_cast<Eigen::Index>(support[j]));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(kRankThreshold);
    if (static_cast<std::size_t>(qr.rank()) < r) continue;
    const Vector xs = qr.solve(bv);
    if ((sub * xs - bv).norm() > tol) continue;
    const double l1 = xs.lpNorm<1>();
    if (l1 < best_l1) {
      best_l1 = l1;
      best.assign(n, 0.0);
      for (std::size_t j = 0; j < r; ++j) best[support[j]] = xs(static_cast<Eigen::Index>(j));
    }
  } while (next_combination(support, n));
  if (best.empty()) throw NumericalError("l1_minimize: no basic solution passed the residual check");
  return finish(m, b, std::move(best), L1Mode::exact);
}

// Least squares on the support of z; kept when it is feasible and no worse.
void polish(const MeasurementMatrix& m, std::span<const double> b, const std::vector<double>& z,
            double tol, L1Solution& s) {
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (z[j] != 0.0) support.push_back(j);
  if (support.empty() || support.size() > m.rows()) return;
  const Matrix a = to_eigen(m);
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j)
    sub.col(static_cast<Eigen::Index>(j)) = a.col(static_cast<Eigen::Index>(support[j]));
  const Eigen::Map<const Vector> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
  qr.setThreshold(kRankThreshold);
  if (static_cast<std::size_t>(qr.rank()) < support.size()) return;
  const Vector xs = qr.solve(bv);
  std::vector<double> x(z.size(), 0.0);
  for (std::size_t j = 0; j < support.size(); ++j) x[support[j]] = xs(static_cast<Eigen::Index>(j));
  const double res = residual_norm(m, x, b);
  const double l1 = l1_norm(x);
  if (res <= tol && l1 <= s.objective) {
    s.x = std::move(x);
    s.objective = l1;
    s.residual = res;
  }
}

L1Solution solve_admm(const MeasurementMatrix& m, std::span<const double> b,
                      const RangeFactor& range, const L1Options& options) {
  const std::size_t n = m.cols();
  // Entries of unit RMS size balance the unit shrinkage threshold.
  const double scale = range.least_squares.norm() / std::sqrt(static_cast<double>(n));
  if (scale == 0.0) {
    L1Solution s = finish(m, b, std::vector<double>(n, 0.0), L1Mode::iterative);
    s.converged = true;
    return s;
  }
  const Vector x_ls = range.least_squares / scale;
  const Matrix& v = range.v;
  const double threshold = 1.0 / options.penalty;

  Vector x = x_ls, z = x_ls, u = Vector::Zero(static_cast<Eigen::Index>(n));
  std::vector<double> history;
  history.reserve(options.max_iterations);
  std::size_t it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    const Vector w = z - u;
    x = x_ls + w - v * (v.transpose() * w);
    const Vector shifted = x + u;
    for (Eigen::Index j = 0; j < shifted.size(); ++j) {
      const double a = std::fabs(shifted(j)) - threshold;
      z(j) = a > 0.0 ? std::copysign(a, shifted(j)) : 0.0;
    }
    u = shifted - z;
    const double obj = x.lpNorm<1>();
    history.push_back(obj);
    if (history.size() > options.stall_window) {
      const double before = history[history.size() - 1 - options.stall_window];
      if (std::fabs(obj - before) <= options.stall_tolerance * std::max(obj, 1e-300) &&
          (x - z).norm() <= kConsensusTolerance * std::max(1.0, x.norm())) {
        ++it;
        converged = true;
        break;
      }
    }
  }

  std::vector<double> xs(n), zs(n);
  for (std::size_t j = 0; j < n; ++j) {
    xs[j] = x(static_cast<Eigen::Index>(j)) * scale;
    zs[j] = z(static_cast<Eigen::Index>(j)) * scale;
  }
  L1Solution s = finish(m, b, std::move(xs), L1Mode::iterative);
  s.iterations = it;
  const double tol = options.feasibility_tolerance * feasibility_scale(b);
  s.converged = converged && s.residual <= tol;
  polish(m, b, zs, tol, s);
  return s;
}

double ball_gauge(std::span<const double> z, const BallDescriptor& ball) {
  if (ball.family == BallFamily::l1) return l1_norm(z) / ball.radius;
  return weak_lp_quasinorm(z, ball.p) / ball.radius;
}

// A subgradient of ball_gauge at z, times the radius.
void gauge_subgradient(std::span<const double> z, const BallDescriptor& ball,
                       std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (ball.family == BallFamily::l1) {
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] > 0 ? 1.0 : (z[j] < 0 ? -1.0 : 0.0);
    return;
  }
  const Rearrangement r = rearrangement(z);
  double best = -1.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const double v = std::pow(static_cast<double>(i + 1), 1.0 / ball.p) * r.values[i];
    if (v > best) {
      best = v;
      at = i;
    }
  }
  const std::size_t j = r.permutation[at];
  out[j] = std::copysign(std::pow(static_cast<double>(at + 1), 1.0 / ball.p), z[j]);
}

// |z| / gauge(z) on the unit-l1 vertex with support `support`, if the
// columns there have a one-dimensional null space.
double vertex_ratio(const Matrix& a, const std::vector<std::size_t>& support) {
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j)
    sub.col(static_cast<Eigen::Index>(j)) = a.col(static_cast<Eigen::Index>(support[j]));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const auto cols = static_cast<Eigen::Index>(support.size());
  const std::size_t rank = numerical_rank(s);
  if (rank + 1 != support.size()) return 0.0;
  const Vector null = svd.matrixV().col(cols - 1);
  return null.norm() / null.lpNorm<1>();
}

}  // namespace

KernelBasis kernel_basis(const MeasurementMatrix& m) {
  const std::size_t n = m.cols();
  KernelBasis out;
  out.basis = PointSet(n);
  const Matrix a = to_eigen(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  out.rank = numerical_rank(svd.singularValues());
  out.dim = n - out.rank;
  const Eigen::MatrixXd& v = svd.matrixV();
  std::vector<double> col(n);
  for (std::size_t c = out.rank; c < n; ++c) {
    for (std::size_t j = 0; j < n; ++j)
      col[j] = v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
    out.basis.push_back(col);
  }
  return out;
}

std::string to_string(L1Mode mode) {
  return mode == L1Mode::exact ? "exact-enumeration" : "iterative-proximal";
}

L1Mode l1_mode_from_string(const std::string& name) {
  if (name == "exact" || name == "exact-enumeration") return L1Mode::exact;
  if (name == "iterative" || name == "iterative-proximal") return L1Mode::iterative;
  throw InvalidArgument("unknown l1 solver mode: " + name);
}

L1Solution l1_minimize(const MeasurementMatrix& m, std::span<const double> b, L1Mode mode,
                       const L1Options& options) {
  require(b.size() == m.rows(), "l1_minimize: b must have k entries");
  require(options.penalty > 0.0, "l1_minimize: penalty must be positive");
  require(options.stall_window >= 1, "l1_minimize: stall window must be positive");
  const RangeFactor range = range_factor(m, b);
  std::vector<double> x_ls(m.cols());
  for (std::size_t j = 0; j < x_ls.size(); ++j) x_ls[j] = range.least_squares(static_cast<Eigen::Index>(j));
  if (residual_norm(m, x_ls, b) > options.feasibility_tolerance * feasibility_scale(b))
    throw Infeasible("l1_minimize: b is not in the range of the matrix");
  return mode == L1Mode::exact ? solve_exact(m, b, range, options)
                               : solve_admm(m, b, range, options);
}

void require_recon_ball(const BallDescriptor& ball) {
  ball.validate();
  require(ball.family == BallFamily::l1 || ball.family == BallFamily::weak_lp,
          "recon: ball must be l1 or weak_lp");
  if (ball.family == BallFamily::weak_lp)
    require(ball.p > 0.0 && ball.p < 1.0, "recon: weak_lp needs 0 < p < 1");
}

double kernel_diameter_lower(const MeasurementMatrix& m, const BallDescriptor& ball,
                             std::size_t restarts, std::uint64_t seed) {
  require_recon_ball(ball);
  require(ball.dim == m.cols(), "kernel_diameter_lower: ball dimension must equal n");
  const KernelBasis kb = kernel_basis(m);
  if (kb.dim == 0) return 0.0;
  const std::size_t n = m.cols();
  const std::size_t d = kb.dim;
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      kt(kb.basis.coords().data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  const Matrix a = to_eigen(m);

  // Starts: kernel projections of e_1..e_n, then random directions.
  const std::size_t starts = n + restarts;
  std::vector<double> best(starts, 0.0);
  std::vector<std::vector<std::size_t>> vertex(starts);
  parallel_for(starts, [&](std::size_t s) {
    Vector c(static_cast<Eigen::Index>(d));
    if (s < n) {
      c = kt.col(static_cast<Eigen::Index>(s));
    } else {
      CounterRng rng(derive_seed(seed, {kAscentStream}), s - n);
      for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
    }
    if (c.norm() <= 1e-12) return;
    std::vector<double> z(n), g(n);
    double step = kAscentStep;
    double value = 0.0;
    for (std::size_t t = 0; t < kAscentSteps; ++t) {
      c.normalize();
      Eigen::Map<Vector>(z.data(), static_cast<Eigen::Index>(n)) = kt.transpose() * c;
      const double gauge = ball_gauge(z, ball);
      value = std::max(value, 1.0 / gauge);
      gauge_subgradient(z, ball, g);
      const Vector pulled = kt * Eigen::Map<const Vector>(g.data(), static_cast<Eigen::Index>(n));
      Vector h = c - pulled / (gauge * ball.radius);
      h -= c * c.dot(h);
      const double hn = h.norm();
      if (hn <= 1e-14) break;
      c += step * h / hn;
      step *= kAscentDecay;
    }
    c.normalize();
    Eigen::Map<Vector>(z.data(), static_cast<Eigen::Index>(n)) = kt.transpose() * c;
    value = std::max(value, 1.0 / ball_gauge(z, ball));
    if (ball.family == BallFamily::l1) {
      // Vertices of a degenerate kernel can have fewer than rank + 1 entries,
      // so every prefix of the sorted support is tried.
      const Rearrangement r = rearrangement(z);
      double vertex_best = -1.0;
      for (std::size_t size = 2; size <= kb.rank + 1; ++size) {
        std::vector<std::size_t> support(r.permutation.begin(),
                                         r.permutation.begin() + static_cast<std::ptrdiff_t>(size));
        std::sort(support.begin(), support.end());
        const double v = vertex_ratio(a, support);
        if (v > vertex_best) {
          vertex_best = v;
          vertex[s] = std::move(support);
        }
      }
      value = std::max(value, vertex_best * ball.radius);
    }
    best[s] = value;
  });

  double top = 0.0;
  for (double v : best) top = std::max(top, v);
  if (ball.family != BallFamily::l1) return 2.0 * top;

  // Swap one index in and one out of the best vertex supports while that helps.
  std::vector<std::size_t> order(starts);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return best[x] > best[y]; });
  std::vector<std::vector<std::size_t>> seeds;
  for (std::size_t s : order) {
    if (seeds.size() == kSwapSearches) break;
    if (vertex[s].empty() || std::find(seeds.begin(), seeds.end(), vertex[s]) != seeds.end()) continue;
    seeds.push_back(vertex[s]);
  }
  std::vector<double> searched(seeds.size(), 0.0);
  parallel_for(seeds.size(), [&](std::size_t i) {
    std::vector<std::size_t> support = seeds[i];
    double value = vertex_ratio(a, support);
    for (bool improved = true; improved;) {
      improved = false;
      std::vector<char> in(n, 0);
      for (std::size_t j : support) in[j] = 1;
      for (std::size_t out = 0; out < support.size() && !improved; ++out) {
        for (std::size_t j = 0; j < n && !improved; ++j) {
          if (in[j]) continue;
          std::vector<std::size_t> trial = support;
          trial[out] = j;
          std::sort(trial.begin(), trial.end());
          const double v = vertex_ratio(a, trial);
          if (v > value * (1.0 + 1e-12)) {
            value = v;
            support = std::move(trial);
            improved = true;
          }
        }
      }
    }
    searched[i] = value * ball.radius;
  });
  for (double v : searched) top = std::max(top, v);
  return 2.0 * top;
}

std::string to_string(CertificateRoute route) {
  switch (route) {
    case CertificateRoute::empty_sphere_section: return "empty-sphere-section";
    case CertificateRoute::signed_basis: return "signed-basis";
    case CertificateRoute::nets: return "nets";
  }
  return "nets";
}

double quasi_convexity_constant(const BallDescriptor& ball) {
  return ball.family == BallFamily::weak_lp ? std::pow(2.0, 1.0 / ball.p) : 1.0;
}

namespace {

// sup |x| over the ball.
double ball_l2_radius(const BallDescriptor& ball) {
  if (ball.family == BallFamily::l1) return ball.radius;
  double s = 0.0;
  for (std::size_t i = 1; i <= ball.dim; ++i) s += std::pow(static_cast<double>(i), -2.0 / ball.p);
  return ball.radius * std::sqrt(s);
}

// sup |x|_1 over the ball.
double ball_l1_radius(const BallDescriptor& ball) {
  if (ball.family == BallFamily::l1) return ball.radius;
  double s = 0.0;
  for (std::size_t i = 1; i <= ball.dim; ++i) s += std::pow(static_cast<double>(i), -1.0 / ball.p);
  return ball.radius * s;
}

// delta with truncation_bound(p, delta) == target.
double truncation_delta(double p, double target) {
  const double c = 2.0 / std::sqrt(2.0 / p - 1.0);
  return std::pow(target / c, 1.0 / (1.0 / p - 0.5));
}

double image_norm(const MeasurementMatrix& m, double scale, std::span<const double> x,
                  std::vector<double>& work) {
  m.apply(x, work);
  return scale * l2_norm(work);
}

}  // namespace

RadiusCertificate kernel_diameter_upper(const MeasurementMatrix& m, const BallDescriptor& ball,
                                        double rho, double theta, std::uint64_t seed,
                                        double point_budget) {
  require_recon_ball(ball);
  require(ball.dim == m.cols(), "kernel_diameter_upper: ball dimension must equal n");
  require(rho > 0.0, "kernel_diameter_upper: rho must be positive");
  require(theta > 0.0 && theta < 1.0, "kernel_diameter_upper: theta must lie in (0, 1)");
  const std::size_t n = m.cols();
  const double scale =
      m.normalization() == Normalization::raw ? 1.0 / std::sqrt(static_cast<double>(m.rows())) : 1.0;
  std::vector<double> work(m.rows());

  RadiusCertificate cert;
  cert.rho = rho;
  cert.theta = theta;
  const double ratio = ball.radius / rho;  // T is (ratio * ball / radius) cap S
  const double top = ball_l2_radius(ball) / rho;
  if (top < 1.0) {
    cert.route = CertificateRoute::empty_sphere_section;
    cert.certified = true;
    return cert;
  }
  if (ball.family == BallFamily::l1 && std::fabs(ratio - 1.0) <= 1e-12) {
    cert.route = CertificateRoute::signed_basis;
    cert.cover_size = 2 * n;
    double low = std::numeric_limits<double>::infinity();
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = 1.0;
      const double v = image_norm(m, scale, e, work);
      e[j] = 0.0;
      low = std::min(low, v);
      cert.worst_isometry_gap = std::max(cert.worst_isometry_gap, std::fabs(v - 1.0));
    }
    cert.norm_lower_bound = low;
    cert.certified = low > 0.0;
    return cert;
  }

  cert.route = CertificateRoute::nets;
  const double eps = theta / 5.0;
  const double p = ball.family == BallFamily::l1 ? 1.0 : ball.p;
  const double exponent = 1.0 / p - 0.5;
  const double m_real = std::max(1.0, std::ceil(std::pow(ratio, 1.0 / exponent) - 1e-9));
  const double delta = truncation_delta(p, theta / 10.0);
  const std::size_t cover_m =
      static_cast<std::size_t>(std::min(std::ceil(m_real / delta), static_cast<double>(n)));
  const double cover_eps = cover_m == n ? eps : theta / 10.0;

  // x - x0 has l1 norm at most sup |x|_1 + sqrt(cover_m); dividing by eps
  // puts it in sqrt(s) B_1 cap B_2 with s below, which lies in 2 conv U~_s.
  const double l1_spread = ball_l1_radius(ball) / rho + std::sqrt(static_cast<double>(cover_m));
  const double s_real = std::ceil(std::pow(l1_spread / eps, 2.0));
  const std::size_t diff_m = s_real >= static_cast<double>(n) ? n : static_cast<std::size_t>(s_real);
  cert.hull_factor = diff_m == n ? 2.0 : 4.0;

  const double need = sparse_net_bound(n, cover_m, cover_eps) + sparse_net_bound(n, diff_m, 0.5);
  if (need > point_budget)
    throw BudgetExceeded("kernel_diameter_upper: nets for rho = " + io::format_double(rho) +
                         " need up to " + io::format_double(need) + " points");

  const Net cover = sparse_set_net(n, cover_m, cover_eps, SparseTarget::sphere,
                                   derive_seed(seed, {kLambdaStream, 0}), {}, point_budget);
  const Net half = sparse_set_net(n, diff_m, 0.5, SparseTarget::ball,
                                  derive_seed(seed, {kLambdaStream, 1}), {}, point_budget);
  cert.cover_size = cover.points.size();
  cert.difference_size = half.points.size();

  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cover.points.size(); ++i) {
    const double v = image_norm(m, scale, cover.points[i], work);
    low = std::min(low, v);
    cert.worst_isometry_gap = std::max(cert.worst_isometry_gap, std::fabs(v - 1.0));
  }
  double spread = 0.0;  // max |A~ z| over Lambda = eps * half
  for (std::size_t i = 0; i < half.points.size(); ++i) {
    const double len = l2_norm(half.points[i]);
    if (len == 0.0) continue;
    const double v = image_norm(m, scale, half.points[i], work);
    spread = std::max(spread, eps * v);
    cert.worst_expansion = std::max(cert.worst_expansion, v / len);
  }
  cert.norm_lower_bound = low - cert.hull_factor * spread;
  cert.certified = cert.worst_isometry_gap <= eps && cert.worst_expansion <= 2.0 &&
                   cert.norm_lower_bound > 0.0;
  return cert;
}

RadiusCertificate certify_kernel_radius(const MeasurementMatrix& m, const BallDescriptor& ball,
                                        double theta, std::uint64_t seed, double point_budget) {
  require_recon_ball(ball);
  // Start where the sphere section is empty (weak-lp) or the signed basis (l1).
  const double start = ball.family == BallFamily::l1 ? ball.radius
                                                     : ball_l2_radius(ball) * (1.0 + 1e-9);
  RadiusCertificate best = kernel_diameter_upper(m, ball, start, theta, seed, point_budget);
  if (!best.certified) return best;
  for (int j = 1; j <= kRadiusGridSteps; ++j) {
    const double rho = start * std::pow(2.0, -0.5 * j);
    RadiusCertificate next;
    try {
      next = kernel_diameter_upper(m, ball, rho, theta, seed, point_budget);
    } catch (const BudgetExceeded&) {
      return best;
    }
    if (!next.certified) return best;
    best = next;
  }
  return best;
}

std::string to_string(SignalModel model) {
  switch (model) {
    case SignalModel::sparse: return "sparse";
    case SignalModel::weak_lp_extremal: return "weak-lp-extremal";
    case SignalModel::random_ball: return "random-ball";
    case SignalModel::zero: return "zero";
  }
  return "sparse";
}

SignalModel signal_model_from_string(const std::string& name) {
  if (name == "sparse") return SignalModel::sparse;
  if (name == "weak-lp-extremal") return SignalModel::weak_lp_extremal;
  if (name == "random-ball") return SignalModel::random_ball;
  if (name == "zero") return SignalModel::zero;
  throw InvalidArgument("unknown t0 model: " + name);
}

std::vector<double> draw_signal(const BallDescriptor& ball, SignalModel model, std::size_t sparsity,
                                std::uint64_t seed) {
  require_recon_ball(ball);
  const std::size_t n = ball.dim;
  std::vector<double> x(n, 0.0);
  CounterRng rng(seed, kSignalStream);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n; ++i) std::swap(order[i], order[i + rng.below(n - i)]);

  switch (model) {
    case SignalModel::sparse: {
      require(sparsity >= 1, "draw_signal: sparsity must be positive");
      const std::size_t s = std::min(sparsity, n);
      for (std::size_t i = 0; i < s; ++i) x[order[i]] = rng.normal();
      break;
    }
    case SignalModel::weak_lp_extremal: {
      const double p = ball.family == BallFamily::l1 ? 1.0 : ball.p;
      for (std::size_t i = 0; i < n; ++i) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        x[order[i]] = sign * std::pow(static_cast<double>(i + 1), -1.0 / p);
      }
      break;
    }
    case SignalModel::random_ball:
      if (ball.family == BallFamily::l1) {
        sample_ambient(rng, ball, x);
      } else {
        sample_weak_lp(rng, ball.p, ball.radius, false, x);
      }
      return x;
    case SignalModel::zero:
      return x;
  }
  const double g = ball_gauge(x, ball);
  if (g > 0.0)
    for (double& v : x) v /= g;
  return x;
}

double reconstruction_error_bound(std::size_t n, std::size_t k, double p,
                                  const ErrorBoundConstants& c) {
  require(k >= 1 && n >= k, "reconstruction_error_bound: need 1 <= k <= n");
  const double kd = static_cast<double>(k);
  return c.scale * std::pow(std::log(c.log_factor * static_cast<double>(n) / kd) / kd, 1.0 / p - 0.5);
}

ErrorBoundConstants fitted_error_bound_constants(const BallDescriptor& ball) {
  require_recon_ball(ball);
  // Largest error / (log(e n / k) / k)^(1/p - 1/2) over seeds 0..49, n = 256,
  // k in {32, 64, 128}, gaussian and bernoulli, extremal and random signals.
  if (ball.family == BallFamily::l1) return {0.71, std::exp(1.0)};
  return {11.1, std::exp(1.0)};
}

ReconResult recon_experiment(const EnsembleSpec& spec, const BallDescriptor& ball,
                             std::uint64_t seed, const ReconOptions& options) {
  require_recon_ball(ball);
  require(ball.dim == spec.n, "recon_experiment: ball dimension must equal n");
  EnsembleSpec drawn = spec;
  drawn.seed = derive_seed(seed, {kMatrixStream, spec.seed});
  const MeasurementMatrix a = generate(drawn);

  ReconResult out;
  out.t0 = draw_signal(ball, options.model, options.sparsity, derive_seed(seed, {spec.seed}));
  if (!member(out.t0, ball)) throw NumericalError("recon_experiment: signal left the ball");
  out.b.assign(spec.k, 0.0);
  a.apply(out.t0, out.b);
  const L1Solution sol = l1_minimize(a, out.b, options.solver);
  out.x_hat = sol.x;
  out.solver = sol.solver;
  out.solver_residual = sol.residual;
  double e = 0.0;
  for (std::size_t j = 0; j < spec.n; ++j) e += (out.x_hat[j] - out.t0[j]) * (out.x_hat[j] - out.t0[j]);
  out.error = std::sqrt(e);
  const double p = ball.family == BallFamily::l1 ? 1.0 : ball.p;
  out.bound = reconstruction_error_bound(spec.n, spec.k, p, fitted_error_bound_constants(ball));

  if (options.certify) {
    // The decoder only guarantees |x_hat|_1 <= |t0|_1, so the difference lies
    // in the kernel intersected with the l1 ball of that radius, doubled.
    const double l1 = l1_norm(out.t0);
    if (l1 == 0.0) {
      out.certified = true;
      return out;
    }
    BallDescriptor feasible;
    feasible.family = BallFamily::l1;
    feasible.dim = spec.n;
    feasible.radius = l1;
    const RadiusCertificate cert =
        certify_kernel_radius(a, feasible, options.theta, seed, options.point_budget);
    out.certified = cert.certified;
    if (cert.certified) {
      out.rho = cert.rho;
      out.certified_bound = 2.0 * cert.rho;
    }
  }
  return out;
}

std::vector<ReconRow> recon_sweep(const ReconSweepConfig& config) {
  require(config.seed_hi > config.seed_lo, "recon_sweep: empty seed range");
  require(!config.k_list.empty(), "recon_sweep: empty k list");
  const std::size_t seeds = config.seed_hi - config.seed_lo;
  const std::size_t ks = config.k_list.size();
  std::vector<ReconRow> rows(seeds * ks);
  const double p = config.ball.family == BallFamily::l1 ? 1.0 : config.ball.p;
  parallel_for(rows.size(), [&](std::size_t i) {
    EnsembleSpec spec = config.ensemble;
    spec.k = config.k_list[i % ks];
    const std::uint64_t seed = config.seed_lo + i / ks;
    const ReconResult r = recon_experiment(spec, config.ball, seed, config.options);
    rows[i] = {seed, spec.n, spec.k, p, r.error, r.rho, r.certified, r.solver_residual};
  });
  return rows;
}

std::string recon_rows_to_csv(const std::vector<ReconRow>& rows) {
  std::string out = "seed,n,k,p,error,rho,certified,solver_tol\n";
  for (const ReconRow& r : rows) {
    out += std::to_string(r.seed) + "," + std::to_string(r.n) + "," + std::to_string(r.k) + "," +
           io::format_double(r.p) + "," + io::format_double(r.error) + "," +
           io::format_double(r.rho) + "," + (r.certified ? "true" : "false") + "," +
           io::format_double(r.solver_tol) + "\n";
  }
  return out;
}

SlopeFit error_exponent_fit(const std::vector<ReconRow>& rows) {
  std::vector<std::size_t> ks;
  for (const ReconRow& r : rows) ks.push_back(r.k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  require(ks.size() >= 2, "error_exponent_fit: need at least two k values");
  std::vector<double> xs, ys;
  for (std::size_t k : ks) {
    std::vector<double> errors;
    for (const ReconRow& r : rows)
      if (r.k == k) errors.push_back(r.error);
    std::sort(errors.begin(), errors.end());
    const std::size_t c = errors.size();
    const double median = c % 2 ? errors[c / 2] : 0.5 * (errors[c / 2 - 1] + errors[c / 2]);
    require(median > 0.0, "error_exponent_fit: median error is zero");
    xs.push_back(std::log(static_cast<double>(k)));
    ys.push_back(std::log(median));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

void to_json(nlohmann::json& j, const ReconSweepConfig& config) {
  j = nlohmann::json{{"ensemble", config.ensemble},
                     {"ball", config.ball},
                     {"t0_model", to_string(config.options.model)},
                     {"sparsity", config.options.sparsity},
                     {"solver", config.options.solver == L1Mode::exact ? "exact" : "iterative"},
                     {"certify", config.options.certify},
                     {"theta", config.options.theta},
                     {"seeds", {config.seed_lo, config.seed_hi}},
                     {"k_list", config.k_list}};
}

void from_json(const nlohmann::json& j, ReconSweepConfig& config) {
  if (j.contains("ensemble")) j.at("ensemble").get_to(config.ensemble);
  if (j.contains("ball")) j.at("ball").get_to(config.ball);
  if (j.contains("t0_model"))
    config.options.model = signal_model_from_string(j.at("t0_model").get<std::string>());
  if (j.contains("sparsity")) config.options.sparsity = j.at("sparsity").get<std::size_t>();
  if (j.contains("solver"))
    config.options.solver = l1_mode_from_string(j.at("solver").get<std::string>());
  if (j.contains("certify")) config.options.certify = j.at("certify").get<bool>();
  if (j.contains("theta")) config.options.theta = j.at("theta").get<double>();
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    require(s.is_array() && s.size() == 2, "recon config: seeds must be [lo, hi)");
    config.seed_lo = s[0].get<std::uint64_t>();
    config.seed_hi = s[1].get<std::uint64_t>();
  }
  if (j.contains("k_list")) config.k_list = j.at("k_list").get<std::vector<std::size_t>>();
}

void to_json(nlohmann::json& j, const RadiusCertificate& c) {
  j = nlohmann::json{{"certified", c.certified},
                     {"rho", c.rho},
                     {"diameter_bound", 2.0 * c.rho},
                     {"theta", c.theta},
                     {"route", to_string(c.route)},
                     {"cover_size", c.cover_size},
                     {"difference_size", c.difference_size},
                     {"worst_isometry_gap", c.worst_isometry_gap},
                     {"worst_expansion", c.worst_expansion},
                     {"hull_factor", c.hull_factor},
                     {"norm_lower_bound", c.norm_lower_bound}};
}

}  // namespace ripl
