#pragma once

// Dense double-precision inner loops used by every other module.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at startup from CPUID; RIPL_SIMD=scalar in the environment
// forces the reference path. Vector variants may reassociate sums, so they
// agree with the reference to rounding, not bit-for-bit. Within one process
// the choice is fixed, so results are reproducible run to run.

#include <cstddef>
#include <span>
#include <string_view>

namespace ripl::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_norm)(const double* a, std::size_t n);
  double (*l1_norm)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // y = A^T x, A row-major rows x cols
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y);
  // |a - b|^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // out_i = sign(x_i) max(|x_i| - tau, 0)
  void (*soft_threshold)(const double* x, double tau, double* out,
                         std::size_t n);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif

// The table chosen at startup.
const KernelTable& active();

// All tables runnable on this machine, scalar first.
std::span<const KernelTable* const> available();

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const double> a) {
  return active().squared_norm(a.data(), a.size());
}

inline double l1_norm(std::span<const double> a) {
  return active().l1_norm(a.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace ripl::kernels
