#include <cstdlib>
#include <string_view>
#include <vector>

#include "ripl/kernels.hpp"

namespace ripl::kernels {
namespace {

bool force_scalar() {
  const char* env = std::getenv("RIPL_SIMD");
  return env != nullptr && std::string_view(env) == "scalar";
}

std::vector<const KernelTable*> detect() {
  std::vector<const KernelTable*> tables{&scalar_table()};
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    tables.push_back(&avx2_table());
#endif
#if defined(__aarch64__)
  tables.push_back(&neon_table());
#endif
  return tables;
}

const std::vector<const KernelTable*>& tables() {
  static const std::vector<const KernelTable*> t = detect();
  return t;
}

}  // namespace

const KernelTable& active() {
  static const KernelTable* chosen =
      force_scalar() ? &scalar_table() : tables().back();
  return *chosen;
}

std::span<const KernelTable* const> available() { return tables(); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

}  // namespace ripl::kernels
