#include "kernelflow/kernel_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kernelflow/errors.hpp"
#include "kernelflow/simd/kernels.hpp"

namespace kernelflow {
namespace {

constexpr double kLadder[] = {1e-12, 1e-10, 1e-8, 1e-6};

double max_asymmetry(const Matrix& K) {
  double worst = 0.0;
  for (Index i = 0; i < K.rows(); ++i)
    for (Index j = i + 1; j < K.cols(); ++j) {
      double d = std::abs(K(i, j) - K(j, i));
      worst = std::max(worst, d / std::max(1.0, std::max(std::abs(K(i, j)), std::abs(K(j, i)))));
    }
  return worst;
}

}  // namespace

ValidationReport validate_psd(const Matrix& K, double tol) {
  ValidationReport r;
  if (K.rows() != K.cols() || !K.allFinite()) return r;
  if (K.size() == 0) {
    r.pass = true;
    return r;
  }
  r.asymmetry = max_asymmetry(K);
  Matrix S = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.max_eigenvalue = es.eigenvalues().maxCoeff();
  r.pass = r.asymmetry <= tol && r.min_eigenvalue >= -tol * std::max(r.max_eigenvalue, 0.0);
  return r;
}

KernelMatrix::KernelMatrix(const Matrix& entries, double tol_psd) {
  if (entries.rows() != entries.cols())
    throw InvalidInput("kernel must be square, got " + std::to_string(entries.rows()) + "x" +
                       std::to_string(entries.cols()));
  if (!entries.allFinite()) throw InvalidInput("kernel has non-finite entries");
  if (max_asymmetry(entries) > 1e-12) throw InvalidInput("kernel is not symmetric");
  auto rep = validate_psd(entries, tol_psd);
  if (!rep.pass)
    throw InvalidInput("kernel is not PSD (min eigenvalue " + std::to_string(rep.min_eigenvalue) + ")");
  k_ = 0.5 * (entries + entries.transpose());
}

KernelMatrix KernelMatrix::trusted(const Matrix& entries) {
  KernelMatrix k;
  k.k_ = 0.5 * (entries + entries.transpose());
  return k;
}

double KernelMatrix::scale() const {
  if (k_.rows() == 0) return 1.0;
  double s = k_.trace() / static_cast<double>(k_.rows());
  return s > 0.0 ? s : 1.0;
}

KernelMatrix gram_kernel(const Matrix& features, double n) {
  if (!(n >= 1.0)) throw InvalidInput("gram_kernel: n must be >= 1");
  if (!features.allFinite()) throw InvalidInput("gram_kernel: non-finite features");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> F = features;
  Matrix out(F.rows(), F.rows());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> G(F.rows(), F.rows());
  simd::gram(F.data(), static_cast<std::size_t>(F.rows()), static_cast<std::size_t>(F.cols()),
            static_cast<std::size_t>(F.cols()), 1.0 / n, G.data());
  out = G;
  return KernelMatrix::trusted(out);
}

CholeskyFactor factorize(const KernelMatrix& J, double jitter) {
  const Matrix& A = J.entries();
  const Index P = A.rows();
  const double dmax = P > 0 ? A.diagonal().cwiseAbs().maxCoeff() : 0.0;
  auto attempt = [&](double eps, CholeskyFactor& out) {
    Eigen::LLT<Matrix> llt(A + eps * Matrix::Identity(P, P));
    if (llt.info() != Eigen::Success) return false;
    Matrix U = llt.matrixU();
    if (!U.allFinite()) return false;
    // pivots at round-off level mean the matrix is singular in working precision
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * (dmax + eps);
    if ((U.diagonal().array().square() <= floor).any()) return false;
    out.U = std::move(U);
    out.jitter = eps;
    return true;
  };
  CholeskyFactor f;
  if (attempt(jitter, f)) return f;
  const double s = J.scale();
  for (double rung : kLadder)
    if (rung * s > jitter && attempt(rung * s, f)) return f;
  throw SingularKernel("factorize: kernel singular after jitter " + std::to_string(1e-6 * s));
}

KernelMatrix rescue_pd(const KernelMatrix& K, double* jitter_used) {
  CholeskyFactor f = factorize(K, 0.0);
  if (jitter_used) *jitter_used = f.jitter;
  if (f.jitter == 0.0) return K;
  return KernelMatrix::trusted(K.entries() + f.jitter * Matrix::Identity(K.size(), K.size()));
}

SpectralDecomposition eigen_spectrum(const KernelMatrix& K) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(K.entries());
  SpectralDecomposition out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  return out;
}

Matrix sym_power(const Matrix& S, double p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  Vector lam = es.eigenvalues();
  for (Index i = 0; i < lam.size(); ++i) {
    double v = std::max(lam(i), 0.0);
    if (p < 0.0 && v == 0.0) throw SingularKernel("sym_power: negative power of a singular matrix");
    lam(i) = v == 0.0 ? 0.0 : std::pow(v, p);
  }
  Matrix Q = es.eigenvectors();
  Matrix out = Q * lam.asDiagonal() * Q.transpose();
  return 0.5 * (out + out.transpose());
}

KernelMatrix geodesic_power(const KernelMatrix& K0, const KernelMatrix& K1, double alpha) {
  if (K0.size() != K1.size()) throw InvalidInput("geodesic_power: size mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("geodesic_power: alpha outside [0,1]");
  if (alpha == 0.0) return K0;
  if (alpha == 1.0) return K1;
  KernelMatrix base = rescue_pd(K0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(base.entries());
  Vector lam = es.eigenvalues();
  if (lam.minCoeff() <= 0.0) throw SingularKernel("geodesic_power: K0 not positive definite");
  const Matrix& Q = es.eigenvectors();
  Matrix half = Q * lam.cwiseSqrt().asDiagonal() * Q.transpose();
  Matrix ihalf = Q * lam.cwiseSqrt().cwiseInverse().asDiagonal() * Q.transpose();
  Matrix M = ihalf * K1.entries() * ihalf;
  Matrix out = half * sym_power(M, alpha) * half;
  return KernelMatrix::trusted(out);
}

}  // namespace kernelflow
