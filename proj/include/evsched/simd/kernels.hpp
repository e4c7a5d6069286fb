#pragma once

// Dense double-precision kernels used by the simplex tableau and the LDF
// voltage model. Every kernel has a scalar reference implementation; wider
// variants are picked once at startup from what the CPU reports.

#include <cstddef>
#include <span>
#include <string_view>

namespace evsched::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // x[i] *= a
  void (*scale)(std::size_t n, double a, double* x);
  double (*dot)(std::size_t n, const double* x, const double* y);
  // y = A x for a row-major rows x cols matrix with row stride `ld`.
  void (*gemv)(std::size_t rows, std::size_t cols, std::size_t ld,
               const double* a, const double* x, double* y);
  // Largest |x[i]|, 0 for n == 0.
  double (*max_abs)(std::size_t n, const double* x);
};

// Tables for each ISA compiled into this binary. Returns nullptr when the ISA
// was not built or the running CPU lacks it.
const KernelTable* table_for(Isa isa);

// Scalar reference table; always available.
const KernelTable& scalar_table();

// Best table for this CPU. EVSCHED_SIMD=scalar|avx2|neon overrides the probe
// (falls back to scalar if the requested ISA is unavailable).
const KernelTable& active();
Isa active_isa();

// Thin span wrappers over the active table.
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(x.size(), a, x.data(), y.data());
}
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.size(), x.data(), y.data());
}
inline void scale(double a, std::span<double> x) {
  active().scale(x.size(), a, x.data());
}
inline double max_abs(std::span<const double> x) {
  return active().max_abs(x.size(), x.data());
}

namespace detail {
extern const KernelTable kScalarTable;
#if defined(EVSCHED_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(EVSCHED_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace evsched::simd
