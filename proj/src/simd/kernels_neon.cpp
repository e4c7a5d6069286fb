#include <arm_neon.h>

#include <cmath>

#include "evsched/simd/kernels.hpp"

namespace evsched::simd {
namespace {

void axpy_neon(std::size_t n, double a, const double* x, double* y) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void scale_neon(std::size_t n, double a, double* x) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), a));
  for (; i < n; ++i) x[i] *= a;
}

double dot_neon(std::size_t n, const double* x, const double* y) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void gemv_neon(std::size_t rows, std::size_t cols, std::size_t ld,
               const double* a, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(cols, a + r * ld, x);
}

double max_abs_neon(std::size_t n, const double* x) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(x + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::fmax(r, std::fabs(x[i]));
  return r;
}

}  // namespace

namespace detail {
const KernelTable kNeonTable{axpy_neon, scale_neon, dot_neon, gemv_neon,
                             max_abs_neon};
}  // namespace detail

}  // namespace evsched::simd
