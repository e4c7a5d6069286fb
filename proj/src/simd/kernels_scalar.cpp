#include <cmath>

#include "evsched/simd/kernels.hpp"

namespace evsched::simd {
namespace {

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void gemv_scalar(std::size_t rows, std::size_t cols, std::size_t ld,
                 const double* a, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(cols, a + r * ld, x);
}

double max_abs_scalar(std::size_t n, const double* x) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(x[i]));
  return m;
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{axpy_scalar, scale_scalar, dot_scalar,
                               gemv_scalar, max_abs_scalar};
}  // namespace detail

}  // namespace evsched::simd
