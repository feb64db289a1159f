#include "kernelflow/simd/kernels.hpp"

namespace kernelflow::simd {
namespace {

double dot_ref(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq_ref(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void axpy_ref(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{"scalar", dot_ref, sum_sq_ref, axpy_ref};
  return t;
}

}  // namespace kernelflow::simd
