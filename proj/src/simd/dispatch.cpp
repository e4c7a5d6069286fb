#include <cstdlib>
#include <string>

#include "evsched/simd/kernels.hpp"

namespace evsched::simd {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(EVSCHED_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(EVSCHED_HAVE_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

Isa probe() {
  if (const char* env = std::getenv("EVSCHED_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && cpu_has(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "neon" && cpu_has(Isa::kNeon)) return Isa::kNeon;
    return Isa::kScalar;
  }
  if (cpu_has(Isa::kAvx2)) return Isa::kAvx2;
  if (cpu_has(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) {
  if (!cpu_has(isa)) return nullptr;
  switch (isa) {
    case Isa::kScalar:
      return &detail::kScalarTable;
#if defined(EVSCHED_HAVE_AVX2)
    case Isa::kAvx2:
      return &detail::kAvx2Table;
#endif
#if defined(EVSCHED_HAVE_NEON)
    case Isa::kNeon:
      return &detail::kNeonTable;
#endif
    default:
      return nullptr;
  }
}

const KernelTable& scalar_table() { return detail::kScalarTable; }

Isa active_isa() {
  static const Isa isa = probe();
  return isa;
}

const KernelTable& active() {
  static const KernelTable& table = *table_for(active_isa());
  return table;
}

}  // namespace evsched::simd
