#pragma once

#include <Eigen/Dense>

namespace kernelflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Symmetric PSD kernel over P points (or P spatial locations).
class KernelMatrix {
 public:
  KernelMatrix() = default;

  /// Validates symmetry, finiteness and PSD-ness (relative to the largest
  /// eigenvalue), then stores the exactly symmetrized matrix.
  explicit KernelMatrix(const Matrix& entries, double tol_psd = 1e-10);

  /// Skips validation; symmetrizes only. For results computed internally.
  static KernelMatrix trusted(const Matrix& entries);

  Index size() const { return k_.rows(); }
  const Matrix& entries() const { return k_; }
  double operator()(Index i, Index j) const { return k_(i, j); }
  double trace() const { return k_.trace(); }
  /// trace / P, or 1 for an empty or zero-trace kernel.
  double scale() const;

 private:
  Matrix k_;
};

struct ValidationReport {
  bool pass = false;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double asymmetry = 0.0;  // max |K_ij - K_ji| / max(1, |K_ij|)
};

ValidationReport validate_psd(const Matrix& K, double tol = 1e-10);

struct SpectralDecomposition {
  Vector eigenvalues;  // descending
  Matrix eigenvectors;  // columns, orthonormal
};

struct CholeskyFactor {
  Matrix U;  // upper triangular, U^T U = J + jitter I
  double jitter = 0.0;
};

/// (1/n) F F^T
KernelMatrix gram_kernel(const Matrix& features, double n);

/// Cholesky with a jitter ladder: the supplied jitter first, then
/// {1e-12, 1e-10, 1e-8, 1e-6} * trace/P. Throws SingularKernel if all fail.
CholeskyFactor factorize(const KernelMatrix& J, double jitter = 0.0);

SpectralDecomposition eigen_spectrum(const KernelMatrix& K);

/// K0^{1/2} (K0^{-1/2} K1 K0^{-1/2})^alpha K0^{1/2}; alpha = 0 and 1 return
/// the endpoints verbatim.
KernelMatrix geodesic_power(const KernelMatrix& K0, const KernelMatrix& K1, double alpha);

/// Symmetric matrix power through the eigendecomposition, negative
/// eigenvalues clamped to zero. Negative powers require a PD input.
Matrix sym_power(const Matrix& S, double p);

/// Returns K0 with the smallest ladder jitter that makes it Cholesky-factorable.
/// Sets *jitter_used if given.
KernelMatrix rescue_pd(const KernelMatrix& K, double* jitter_used = nullptr);

}  // namespace kernelflow
