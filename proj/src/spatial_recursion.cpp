#include <cmath>
#include <vector>

#include "kernelflow/errors.hpp"
#include "kernelflow/prior_flexibility.hpp"
#include "kernelflow/simd/kernels.hpp"

namespace kernelflow {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out_{r,u} = (1/D) sum_d M_{r+d, u+d}
Matrix shift_average(const Matrix& M, const std::vector<int>& disp) {
  const Index S = M.rows();
  const double w = 1.0 / static_cast<double>(disp.size());
  RowMat in = M, out = RowMat::Zero(S, S);
  for (Index r = 0; r < S; ++r)
    for (int d : disp) {
      const Index src = ((r + d) % S + S) % S;
      simd::axpy_circular(w, in.row(src).data(), out.row(r).data(), static_cast<std::size_t>(S), d);
    }
  return out;
}

// out_{r,u} = (1/D^2) sum_{d,d'} C_{r+d, u+d'}
Matrix box_filter(const Matrix& C, const std::vector<int>& disp) {
  const Index S = C.rows();
  const double w = 1.0 / static_cast<double>(disp.size());
  RowMat in = C, tmp = RowMat::Zero(S, S), out = RowMat::Zero(S, S);
  for (Index r = 0; r < S; ++r)
    for (int d : disp) {
      const Index src = ((r + d) % S + S) % S;
      simd::axpy(w, in.row(src).data(), tmp.row(r).data(), static_cast<std::size_t>(S));
    }
  for (Index r = 0; r < S; ++r)
    for (int d : disp) simd::axpy_circular(w, tmp.row(r).data(), out.row(r).data(), static_cast<std::size_t>(S), d);
  return out;
}

Matrix hidden_mean(const Matrix& M, const ArchitectureSpec& spec) {
  Matrix J = shift_average(M, spec.displacements);
  if (spec.kind == NetKind::LCN) J = Matrix(J.diagonal().asDiagonal());
  return J;
}

}  // namespace

SpatialRecursion spatial_cov_recursion(const SpatialKernelState& input, const ArchitectureSpec& spec) {
  spec.check();
  if (spec.kind == NetKind::FC) throw InvalidInput("spatial_cov_recursion: needs a CNN or LCN architecture");
  const Index S = spec.spatial_size;
  if (input.mean_kernel.rows() != S || input.mean_kernel.cols() != S || input.diag_cov.rows() != S ||
      input.diag_cov.cols() != S)
    throw InvalidInput("spatial_cov_recursion: input state must be S x S");
  SpatialRecursion out;
  out.layers.push_back(input);
  SpatialKernelState cur = input;
  for (int l = 0; l + 1 < spec.depth; ++l) {
    const double N = spec.widths[static_cast<std::size_t>(l)];
    SpatialKernelState next;
    next.mean_kernel = hidden_mean(cur.mean_kernel, spec);
    next.diag_cov = box_filter(cur.diag_cov, spec.displacements) + (2.0 / N) * next.mean_kernel.cwiseAbs2();
    cur = next;
    out.layers.push_back(cur);
  }
  const double Nf = spec.widths.back();
  const double S2 = static_cast<double>(S) * S;
  if (spec.readout == Readout::SpatialMean) {
    out.final_mean = cur.mean_kernel.trace() / S;
    out.final_variance = cur.diag_cov.sum() / S2 + (2.0 / Nf) * cur.mean_kernel.squaredNorm() / S2;
  } else {
    const double mJ = cur.mean_kernel.trace() / S;
    out.final_mean = mJ;
    out.final_variance = cur.diag_cov.sum() / S2 + (2.0 / Nf) * mJ * mJ;
  }
  return out;
}

SpatialRecursion spatial_cov_recursion_exact(const Matrix& input_mean, const ArchitectureSpec& spec,
                                             std::size_t max_bytes) {
  spec.check();
  if (spec.kind == NetKind::FC) throw InvalidInput("spatial_cov_recursion_exact: needs a CNN or LCN architecture");
  const Index S = spec.spatial_size;
  if (input_mean.rows() != S || input_mean.cols() != S)
    throw InvalidInput("spatial_cov_recursion_exact: input mean must be S x S");
  const std::size_t s = static_cast<std::size_t>(S);
  const std::size_t n4 = s * s * s * s;
  if (2 * n4 * sizeof(double) > max_bytes)
    throw ResourceLimit("spatial_cov_recursion_exact: S^4 covariance needs " +
                        std::to_string(2 * n4 * sizeof(double)) + " bytes");
  auto at = [s](std::size_t r, std::size_t q, std::size_t u, std::size_t v) { return ((r * s + q) * s + u) * s + v; };
  const std::vector<int>& disp = spec.displacements;
  const double w = 1.0 / static_cast<double>(disp.size());
  auto wrap = [S](Index i) { return static_cast<std::size_t>(((i % S) + S) % S); };

  std::vector<double> C(n4, 0.0), B(n4, 0.0);
  Matrix M = 0.5 * (input_mean + input_mean.transpose());
  auto diag_of = [&](const std::vector<double>& T) {
    Matrix d(S, S);
    for (std::size_t r = 0; r < s; ++r)
      for (std::size_t u = 0; u < s; ++u) d(static_cast<Index>(r), static_cast<Index>(u)) = T[at(r, r, u, u)];
    return d;
  };
  SpatialRecursion out;
  out.layers.push_back({M, Matrix::Zero(S, S)});

  for (int l = 0; l + 1 < spec.depth; ++l) {
    const double N = spec.widths[static_cast<std::size_t>(l)];
    Matrix Mj = hidden_mean(M, spec);
    // covariance of J lands in C
    if (spec.kind == NetKind::CNN) {
      std::fill(B.begin(), B.end(), 0.0);
      for (std::size_t r = 0; r < s; ++r)
        for (std::size_t q = 0; q < s; ++q)
          for (int d : disp)
            simd::axpy(w, &C[at(wrap(static_cast<Index>(r) + d), wrap(static_cast<Index>(q) + d), 0, 0)],
                       &B[at(r, q, 0, 0)], s * s);
      std::fill(C.begin(), C.end(), 0.0);
      for (std::size_t r = 0; r < s; ++r)
        for (std::size_t q = 0; q < s; ++q)
          for (std::size_t u = 0; u < s; ++u)
            for (int d : disp)
              simd::axpy_circular(w, &B[at(r, q, wrap(static_cast<Index>(u) + d), 0)], &C[at(r, q, u, 0)], s, d);
    } else {
      Matrix Cd = box_filter(diag_of(C), disp);
      std::fill(C.begin(), C.end(), 0.0);
      for (std::size_t r = 0; r < s; ++r)
        for (std::size_t u = 0; u < s; ++u) C[at(r, r, u, u)] = Cd(static_cast<Index>(r), static_cast<Index>(u));
    }
    // K update into B
    const double inv = 1.0 / N;
    for (std::size_t r = 0; r < s; ++r)
      for (std::size_t q = 0; q < s; ++q)
        for (std::size_t u = 0; u < s; ++u)
          for (std::size_t v = 0; v < s; ++v) {
            const Index R = static_cast<Index>(r), Q = static_cast<Index>(q), U = static_cast<Index>(u),
                        V = static_cast<Index>(v);
            B[at(r, q, u, v)] = C[at(r, q, u, v)] + inv * (Mj(R, U) * Mj(Q, V) + Mj(R, V) * Mj(Q, U) +
                                                           C[at(r, u, q, v)] + C[at(r, v, q, u)]);
          }
    std::swap(B, C);
    M = Mj;
    out.layers.push_back({M, diag_of(C)});
  }
  const double Nf = spec.widths.back();
  const double S2 = static_cast<double>(S) * S;
  double diag_sum = 0.0, cross_sum = 0.0;
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t u = 0; u < s; ++u) {
      diag_sum += C[at(r, r, u, u)];
      cross_sum += C[at(r, u, r, u)];
    }
  if (spec.readout == Readout::SpatialMean) {
    out.final_mean = M.trace() / S;
    out.final_variance = diag_sum / S2 + (2.0 / Nf) * (M.squaredNorm() + cross_sum) / S2;
  } else {
    const double mJ = M.trace() / S, vJ = diag_sum / S2;
    out.final_mean = mJ;
    out.final_variance = vJ + (2.0 / Nf) * (mJ * mJ + vJ);
  }
  return out;
}

}  // namespace kernelflow
