// aarch64 only; NEON is baseline there so no runtime probe is needed.

#include "ripl/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace ripl::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_norm_neon(const double* a, std::size_t n) { return dot_neon(a, a, n); }

double l1_norm_neon(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(a + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* x,
               double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(a + r * cols, x, cols);
}

void gemv_t_neon(const double* a, std::size_t rows, std::size_t cols, const double* x,
                 double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_neon(x[r], a + r * cols, y, cols);
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void soft_threshold_neon(const double* x, double tau, double* out, std::size_t n) {
  const float64x2_t vt = vdupq_n_f64(tau);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    const float64x2_t mag = vmaxq_f64(vsubq_f64(vabsq_f64(v), vt), zero);
    const uint64x2_t keep = vcgtq_f64(mag, zero);
    const float64x2_t signed_mag = vbslq_f64(vdupq_n_u64(0x8000000000000000ULL), v, mag);
    vst1q_f64(out + i, vreinterpretq_f64_u64(
                           vandq_u64(vreinterpretq_u64_f64(signed_mag), keep)));
  }
  for (; i < n; ++i) {
    const double mag = std::fabs(x[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      Isa::neon,        dot_neon,    squared_norm_neon,
      l1_norm_neon,     axpy_neon,   gemv_neon,
      gemv_t_neon,      squared_distance_neon,
      soft_threshold_neon,
  };
  return table;
}

}  // namespace ripl::kernels

#endif
