#pragma once

#include <cstddef>

namespace kernelflow::simd {

struct KernelTable {
  const char* name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(KERNELFLOW_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(KERNELFLOW_HAVE_NEON)
const KernelTable& neon_table();
#endif

enum class Backend { Auto, Scalar };

/// Table picked at first use from the running CPU, or scalar if forced.
const KernelTable& active();
void force_backend(Backend b);
bool vector_backend_available();

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline double sum_sq(const double* x, std::size_t n) { return active().sum_sq(x, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }

/// y[i] += a * x[(i + shift) mod n]
void axpy_circular(double a, const double* x, double* y, std::size_t n, long shift);

/// out (P x P, row-major) = scale * F F^T, F row-major P x n with row stride ld.
void gram(const double* F, std::size_t P, std::size_t n, std::size_t ld, double scale, double* out);

}  // namespace kernelflow::simd
