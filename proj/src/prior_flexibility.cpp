#include "kernelflow/prior_flexibility.hpp"

#include <cmath>
#include <set>

#include "kernelflow/errors.hpp"
#include "kernelflow/seed_stream.hpp"

namespace kernelflow {

void ArchitectureSpec::check() const {
  if (depth < 1) throw InvalidInput("architecture: depth must be >= 1");
  if (static_cast<int>(widths.size()) != depth)
    throw InvalidInput("architecture: need one width per layer (" + std::to_string(depth) + ")");
  for (double w : widths)
    if (!(w >= 1.0)) throw InvalidInput("architecture: widths must be >= 1");
  if (spatial_size < 1) throw InvalidInput("architecture: spatial size must be >= 1");
  if (input_channels < 1) throw InvalidInput("architecture: input channels must be >= 1");
  if (kind == NetKind::FC) {
    if (spatial_size != 1) throw InvalidInput("architecture: fully-connected networks use S = 1");
    return;
  }
  if (displacements.empty()) throw InvalidInput("architecture: displacement set is empty");
  if (std::set<int>(displacements.begin(), displacements.end()).size() != displacements.size())
    throw InvalidInput("architecture: displacements must be distinct");
  if (!circular) throw InvalidInput("architecture: only circular wrap-around is supported");
}

ArchitectureSpec ArchitectureSpec::uniform(NetKind kind, int depth, double N, int S) {
  ArchitectureSpec a;
  a.kind = kind;
  a.depth = depth;
  a.widths.assign(static_cast<std::size_t>(std::max(depth, 0)), N);
  a.spatial_size = S;
  return a;
}

KernelCovariance4::KernelCovariance4(const Matrix& mean) : mean_(mean) {
  const auto P = static_cast<std::size_t>(mean.rows());
  cov_.assign(P * P * P * P, 0.0);
}

KernelCovariance4 fc_cov_recursion(const KernelMatrix& L0, const std::vector<double>& widths, CovMode mode) {
  for (double w : widths)
    if (!(w >= 1.0)) throw InvalidInput("fc_cov_recursion: widths must be >= 1");
  KernelCovariance4 c(L0.entries());
  const Index P = L0.size();
  const Matrix& M = L0.entries();
  for (double N : widths) {
    const KernelCovariance4* old = nullptr;
    KernelCovariance4 snapshot;
    if (mode == CovMode::Exact) {
      snapshot = c;
      old = &snapshot;
    }
    for (Index i = 0; i < P; ++i)
      for (Index j = 0; j < P; ++j)
        for (Index k = 0; k < P; ++k)
          for (Index l = 0; l < P; ++l) {
            double add = M(i, k) * M(j, l) + M(i, l) * M(j, k);
            if (old) add += (*old)(i, k, j, l) + (*old)(i, l, j, k);
            c(i, j, k, l) += add / N;
          }
  }
  return c;
}

SpatialKernelState InputState::realized() const {
  SpatialKernelState s;
  s.mean_kernel = raw * raw.transpose() / static_cast<double>(raw.cols());
  s.mean_kernel = 0.5 * (s.mean_kernel + s.mean_kernel.transpose());
  s.diag_cov = Matrix::Zero(raw.rows(), raw.rows());
  return s;
}

InputState make_input_state(bool structured, int S, int M0, std::uint64_t seed) {
  if (S < 1 || M0 < 1) throw InvalidInput("make_input_state: S and M0 must be >= 1");
  Rng rng(seed_stream(seed, {"input", structured ? "structured" : "unstructured"}));
  std::normal_distribution<double> gauss;
  InputState in;
  in.raw = Matrix(S, M0);
  auto draw_row = [&](Index r) {
    for (Index m = 0; m < M0; ++m) in.raw(r, m) = gauss(rng);
    double nrm = in.raw.row(r).norm();
    if (nrm == 0.0) {
      in.raw.row(r).setOnes();
      nrm = in.raw.row(r).norm();
    }
    in.raw.row(r) *= std::sqrt(static_cast<double>(M0)) / nrm;
  };
  draw_row(0);
  for (Index r = 1; r < S; ++r) {
    if (structured)
      in.raw.row(r) = in.raw.row(0);
    else
      draw_row(r);
  }
  in.ideal.mean_kernel = structured ? Matrix(Matrix::Ones(S, S)) : Matrix(Matrix::Identity(S, S));
  in.ideal.diag_cov = Matrix::Zero(S, S);
  return in;
}

void variance_with_jackknife(const std::vector<double>& x, double& var, double& se) {
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("variance needs at least 2 samples");
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(n);
  double s2 = 0.0;
  for (double v : x) s2 += (v - m) * (v - m);
  const double dn = static_cast<double>(n);
  var = s2 / (dn - 1.0);
  if (n < 3) {
    se = 0.0;
    return;
  }
  // leave-one-out variances in closed form
  double mean_loo = 0.0;
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - m;
    loo[i] = (s2 - dn / (dn - 1.0) * d * d) / (dn - 2.0);
    mean_loo += loo[i];
  }
  mean_loo /= dn;
  double acc = 0.0;
  for (double v : loo) acc += (v - mean_loo) * (v - mean_loo);
  se = std::sqrt((dn - 1.0) / dn * acc);
}

}  // namespace kernelflow
