#include <atomic>

#include "kernelflow/simd/kernels.hpp"

namespace kernelflow::simd {
namespace {

const KernelTable* detect() {
#if defined(KERNELFLOW_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_table();
#endif
#if defined(KERNELFLOW_HAVE_NEON)
  return &neon_table();
#endif
  return &scalar_table();
}

std::atomic<bool> g_force_scalar{false};

}  // namespace

bool vector_backend_available() {
  static const KernelTable* best = detect();
  return best != &scalar_table();
}

const KernelTable& active() {
  static const KernelTable* best = detect();
  return g_force_scalar.load(std::memory_order_relaxed) ? scalar_table() : *best;
}

void force_backend(Backend b) { g_force_scalar.store(b == Backend::Scalar); }

void axpy_circular(double a, const double* x, double* y, std::size_t n, long shift) {
  if (n == 0) return;
  long m = static_cast<long>(n);
  std::size_t s = static_cast<std::size_t>(((shift % m) + m) % m);
  const auto& k = active();
  k.axpy(a, x + s, y, n - s);
  if (s) k.axpy(a, x, y + (n - s), s);
}

void gram(const double* F, std::size_t P, std::size_t n, std::size_t ld, double scale, double* out) {
  const auto& k = active();
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t j = i; j < P; ++j) {
      double v = scale * k.dot(F + i * ld, F + j * ld, n);
      out[i * P + j] = v;
      out[j * P + i] = v;
    }
  }
}

}  // namespace kernelflow::simd
