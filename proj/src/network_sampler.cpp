#include <algorithm>
#include <cmath>
#include <string>

#include "kernelflow/errors.hpp"
#include "kernelflow/parallel.hpp"
#include "kernelflow/prior_flexibility.hpp"
#include "kernelflow/seed_stream.hpp"
#include "kernelflow/simd/kernels.hpp"

namespace kernelflow {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr long kChunks = 64;

struct Welford {
  long n = 0;
  Matrix mean, m2;
  void add(const Matrix& x) {
    if (n == 0) {
      mean = Matrix::Zero(x.rows(), x.cols());
      m2 = mean;
    }
    ++n;
    Matrix delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }
  void merge(const Welford& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
    Matrix delta = o.mean - mean;
    mean += delta * (nb / nt);
    m2 += o.m2 + delta.cwiseAbs2() * (na * nb / nt);
    n += o.n;
  }
};

void fill_normal(RowMat& m, Rng& rng) {
  std::normal_distribution<double> g;
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
}

// B with B B^T = J for PSD J (pivoted LDL^T, negative pivots clamped)
Matrix psd_root(const Matrix& J) {
  Eigen::LDLT<Matrix> ldlt(J);
  Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Matrix Lm = Matrix(ldlt.matrixL()) * d.asDiagonal();
  return ldlt.transpositionsP().transpose() * Lm;
}

Matrix gram_of(const RowMat& A, double n) {
  RowMat G(A.rows(), A.rows());
  simd::gram(A.data(), static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()),
             static_cast<std::size_t>(A.cols()), 1.0 / n, G.data());
  return G;
}

Matrix conv_J(const Matrix& L, const ArchitectureSpec& spec) {
  const Index S = L.rows();
  const double w = 1.0 / spec.D();
  RowMat in = L, out = RowMat::Zero(S, S);
  for (Index r = 0; r < S; ++r)
    for (int d : spec.displacements) {
      const Index src = ((r + d) % S + S) % S;
      simd::axpy_circular(w, in.row(src).data(), out.row(r).data(), static_cast<std::size_t>(S), d);
    }
  Matrix J = out;
  if (spec.kind == NetKind::LCN) J = Matrix(J.diagonal().asDiagonal());
  return J;
}

// One network in kernel space. Pushes every layer's kernel into `layers`.
void run_kernel_space(const ArchitectureSpec& spec, const Matrix& L0, Rng& rng, std::vector<Matrix>& layers) {
  Matrix L = L0;
  const bool fc = spec.kind == NetKind::FC;
  const int hidden = fc ? spec.depth : spec.depth - 1;
  for (int l = 0; l < hidden; ++l) {
    const double N = spec.widths[static_cast<std::size_t>(l)];
    Matrix J = fc ? L : conv_J(L, spec);
    Matrix B = spec.kind == NetKind::LCN ? Matrix(J.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal()) : psd_root(J);
    RowMat V(J.rows(), static_cast<Index>(N));
    fill_normal(V, rng);
    RowMat A = B * V;
    L = gram_of(A, N);
    layers.push_back(L);
  }
  if (fc) return;
  const double Nf = spec.widths.back();
  const double S = static_cast<double>(L.rows());
  double top;
  if (spec.readout == Readout::SpatialMean) {
    RowMat V(L.rows(), static_cast<Index>(Nf));
    fill_normal(V, rng);
    RowMat A = psd_root(L) * V;
    top = simd::sum_sq(A.data(), static_cast<std::size_t>(A.size())) / (S * Nf);
  } else {
    RowMat v(1, static_cast<Index>(Nf));
    fill_normal(v, rng);
    top = L.trace() / S * simd::sum_sq(v.data(), static_cast<std::size_t>(v.size())) / Nf;
  }
  layers.push_back(Matrix::Constant(1, 1, top));
}

void run_weight_space(const ArchitectureSpec& spec, const Matrix& X, Rng& rng, std::vector<Matrix>& layers) {
  RowMat H = X;
  const bool fc = spec.kind == NetKind::FC;
  const int hidden = fc ? spec.depth : spec.depth - 1;
  const Index S = H.rows();
  for (int l = 0; l < hidden; ++l) {
    const Index M = H.cols();
    const Index N = static_cast<Index>(spec.widths[static_cast<std::size_t>(l)]);
    RowMat A = RowMat::Zero(S, N);
    if (fc) {
      RowMat W(M, N);
      fill_normal(W, rng);
      A = H * W / std::sqrt(static_cast<double>(M));
    } else {
      const double scale = 1.0 / std::sqrt(static_cast<double>(M) * spec.D());
      auto shifted = [&](int d) {
        RowMat Hs(S, M);
        for (Index r = 0; r < S; ++r) Hs.row(r) = H.row(((r + d) % S + S) % S);
        return Hs;
      };
      if (spec.kind == NetKind::CNN) {
        for (int d : spec.displacements) {
          RowMat W(M, N);
          fill_normal(W, rng);
          A += shifted(d) * W * scale;
        }
      } else {
        for (Index r = 0; r < S; ++r)
          for (int d : spec.displacements) {
            RowMat W(M, N);
            fill_normal(W, rng);
            A.row(r) += H.row(((r + d) % S + S) % S) * W * scale;
          }
      }
    }
    layers.push_back(gram_of(A, static_cast<double>(N)));
    H = A;
  }
  if (fc) return;
  const Index M = H.cols();
  const Index Nf = static_cast<Index>(spec.widths.back());
  double top;
  if (spec.readout == Readout::SpatialMean) {
    RowMat W(M, Nf);
    fill_normal(W, rng);
    RowMat A = H * W / std::sqrt(static_cast<double>(M));
    top = simd::sum_sq(A.data(), static_cast<std::size_t>(A.size())) / (static_cast<double>(S) * Nf);
  } else {
    RowMat W(S * M, Nf);
    fill_normal(W, rng);
    Eigen::Map<const Eigen::RowVectorXd> h(H.data(), S * M);
    Eigen::RowVectorXd y = h * W / std::sqrt(static_cast<double>(S * M));
    top = y.squaredNorm() / static_cast<double>(Nf);
  }
  layers.push_back(Matrix::Constant(1, 1, top));
}

}  // namespace

KernelSampleStats sample_finite_network_kernels(const ArchitectureSpec& spec, const Matrix& input, long n_networks,
                                                std::uint64_t seed, const SamplerOptions& opt) {
  spec.check();
  if (n_networks < 2) throw InvalidInput("sampler: n_networks must be >= 2");
  if (!input.allFinite() || input.rows() < 1 || input.cols() < 1) throw InvalidInput("sampler: bad input matrix");
  if (spec.kind != NetKind::FC && input.rows() != spec.spatial_size)
    throw InvalidInput("sampler: conv input must have S rows");
  const std::size_t rows = static_cast<std::size_t>(input.rows());
  for (double w : spec.widths) {
    const double elems = static_cast<double>(rows) * w;
    if (elems > static_cast<double>(opt.max_elements))
      throw ResourceLimit("sampler: layer needs " + std::to_string(static_cast<long long>(elems)) +
                          " activations, cap is " + std::to_string(opt.max_elements));
  }
  const Matrix L0 = input * input.transpose() / static_cast<double>(input.cols());
  const long chunks = std::min(kChunks, n_networks);
  std::vector<std::vector<Welford>> acc(static_cast<std::size_t>(chunks));
  std::vector<Matrix> tops(static_cast<std::size_t>(n_networks));
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    const long lo = static_cast<long>(c) * n_networks / chunks, hi = static_cast<long>(c + 1) * n_networks / chunks;
    auto& w = acc[c];
    std::vector<Matrix> layers;
    for (long k = lo; k < hi; ++k) {
      Rng rng(seed_stream(seed, {"network", static_cast<std::uint64_t>(k)}));
      layers.clear();
      if (opt.mode == SamplerMode::KernelSpace)
        run_kernel_space(spec, L0, rng, layers);
      else
        run_weight_space(spec, input, rng, layers);
      if (w.empty()) w.resize(layers.size());
      for (std::size_t l = 0; l < layers.size(); ++l) w[l].add(layers[l]);
      tops[static_cast<std::size_t>(k)] = layers.back();
    }
  });
  std::vector<Welford> total = acc.front();
  for (std::size_t c = 1; c < acc.size(); ++c)
    for (std::size_t l = 0; l < total.size(); ++l) total[l].merge(acc[c][l]);

  KernelSampleStats st;
  st.n_networks = n_networks;
  for (const auto& w : total) {
    st.layer_mean.push_back(w.mean);
    st.layer_mean_se.push_back((w.m2 / static_cast<double>((w.n - 1) * w.n)).cwiseSqrt());
  }
  const Index R = tops.front().rows(), C = tops.front().cols();
  st.top_mean = total.back().mean;
  st.top_var = Matrix(R, C);
  st.top_var_se = Matrix(R, C);
  std::vector<double> x(static_cast<std::size_t>(n_networks));
  for (Index i = 0; i < R; ++i)
    for (Index j = 0; j < C; ++j) {
      for (long k = 0; k < n_networks; ++k) x[static_cast<std::size_t>(k)] = tops[static_cast<std::size_t>(k)](i, j);
      variance_with_jackknife(x, st.top_var(i, j), st.top_var_se(i, j));
    }
  return st;
}

}  // namespace kernelflow
