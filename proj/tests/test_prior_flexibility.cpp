#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kernelflow/errors.hpp"
#include "kernelflow/prior_flexibility.hpp"

using namespace kernelflow;

namespace {

KernelMatrix scalar(double v) { return KernelMatrix(Matrix::Constant(1, 1, v)); }

ArchitectureSpec conv(NetKind kind, int depth, double N, int S) { return ArchitectureSpec::uniform(kind, depth, N, S); }

SpatialKernelState ideal_state(bool structured, int S) {
  SpatialKernelState s;
  s.mean_kernel = structured ? Matrix(Matrix::Ones(S, S)) : Matrix(Matrix::Identity(S, S));
  s.diag_cov = Matrix::Zero(S, S);
  return s;
}

}  // namespace

TEST(FcRecursion, SingleLayerVariance) {
  auto c = fc_cov_recursion(scalar(1), {2}, CovMode::Exact);
  EXPECT_NEAR(c(0, 0, 0, 0), 1.0, 1e-15);
  EXPECT_NEAR(c.mean()(0, 0), 1.0, 1e-15);
}

TEST(FcRecursion, ApproximateGrowsLinearlyWithDepth) {
  auto c = fc_cov_recursion(scalar(1), std::vector<double>(16, 1024), CovMode::Approximate);
  EXPECT_NEAR(c(0, 0, 0, 0), 0.03125, 1e-15);
}

TEST(FcRecursion, ExactSingleDatapointClosedForm) {
  for (double N : {2.0, 8.0, 64.0})
    for (int depth : {1, 4, 16}) {
      auto c = fc_cov_recursion(scalar(1), std::vector<double>(depth, N), CovMode::Exact);
      double want = std::pow(1 + 2 / N, depth) - 1;
      EXPECT_NEAR(c(0, 0, 0, 0), want, 1e-12 * want) << N << " " << depth;
    }
}

TEST(FcRecursion, OrthonormalPairOffDiagonal) {
  auto c = fc_cov_recursion(KernelMatrix(Matrix::Identity(2, 2)), {10}, CovMode::Exact);
  EXPECT_NEAR(c(0, 1, 0, 1), 0.1, 1e-15);
  EXPECT_NEAR(c(0, 0, 1, 1), 0.0, 1e-15);
}

TEST(FcRecursion, EmptyDepthIsZero) {
  auto c = fc_cov_recursion(scalar(3), {}, CovMode::Exact);
  EXPECT_EQ(c(0, 0, 0, 0), 0.0);
  EXPECT_EQ(c.mean()(0, 0), 3.0);
}

TEST(FcRecursion, TensorSymmetriesAndMean) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix F(3, 5);
  for (Index i = 0; i < F.size(); ++i) F.data()[i] = g(rng);
  KernelMatrix L0(F * F.transpose() / 5.0);
  for (auto mode : {CovMode::Exact, CovMode::Approximate}) {
    auto c = fc_cov_recursion(L0, {4, 7, 5}, mode);
    EXPECT_EQ(c.mean(), L0.entries());
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j)
        for (Index k = 0; k < 3; ++k)
          for (Index l = 0; l < 3; ++l) {
            double v = c(i, j, k, l);
            EXPECT_EQ(v, c(j, i, k, l));
            EXPECT_EQ(v, c(i, j, l, k));
            EXPECT_EQ(v, c(k, l, i, j));
          }
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) EXPECT_GE(c(i, j, i, j), -1e-10);
  }
}

TEST(FcRecursion, ModesAgreeToFirstOrder) {
  Matrix L0(2, 2);
  L0 << 1.0, 0.3, 0.3, 0.8;
  for (double N : {64.0, 256.0, 1024.0})
    for (int depth : {1, 4, 16}) {
      std::vector<double> w(depth, N);
      auto e = fc_cov_recursion(KernelMatrix(L0), w, CovMode::Exact);
      auto a = fc_cov_recursion(KernelMatrix(L0), w, CovMode::Approximate);
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j) {
          double rel = std::abs(e(i, j, i, j) - a(i, j, i, j)) / e(i, j, i, j);
          EXPECT_LE(rel, 2.0 * depth / N) << N << " " << depth;
        }
    }
}

TEST(SpatialRecursion, StructuredCnnTwoLayers) {
  const double N = 16;
  auto spec = conv(NetKind::CNN, 2, N, 8);
  auto a = spatial_cov_recursion(ideal_state(true, 8), spec);
  EXPECT_NEAR(a.final_variance, 4 / N, 1e-14);
  EXPECT_NEAR(a.final_mean, 1.0, 1e-14);
  auto e = spatial_cov_recursion_exact(Matrix::Ones(8, 8), spec);
  EXPECT_NEAR(e.final_variance, std::pow(1 + 2 / N, 2) - 1, 1e-13);
}

TEST(SpatialRecursion, StructuredCnnMatchesFcExactly) {
  for (int depth : {1, 3, 8}) {
    auto e = spatial_cov_recursion_exact(Matrix::Ones(6, 6), conv(NetKind::CNN, depth, 10, 6));
    EXPECT_NEAR(e.final_variance, std::pow(1.2, depth) - 1, 1e-12) << depth;
  }
}

TEST(SpatialRecursion, LcnUnstructuredMeanTerm) {
  const int S = 32;
  const double N = 64;
  auto a = spatial_cov_recursion(ideal_state(false, S), conv(NetKind::LCN, 2, N, S));
  // hidden diagonal covariance 2/N on the diagonal only, plus the readout mean term
  EXPECT_NEAR(a.final_variance, 2 / (N * S) + 2 / (N * S), 1e-15);
  auto one = spatial_cov_recursion(ideal_state(false, S), conv(NetKind::LCN, 1, N, S));
  EXPECT_NEAR(one.final_variance, 2 / (N * S), 1e-16);
}

TEST(SpatialRecursion, LcnStructuredEqualsUnstructured) {
  for (int depth : {2, 5, 16}) {
    auto s = spatial_cov_recursion(ideal_state(true, 16), conv(NetKind::LCN, depth, 32, 16));
    auto u = spatial_cov_recursion(ideal_state(false, 16), conv(NetKind::LCN, depth, 32, 16));
    EXPECT_NEAR(s.final_variance, u.final_variance, 1e-14 * u.final_variance);
    auto se = spatial_cov_recursion_exact(Matrix::Ones(16, 16), conv(NetKind::LCN, depth, 32, 16));
    auto ue = spatial_cov_recursion_exact(Matrix::Identity(16, 16), conv(NetKind::LCN, depth, 32, 16));
    EXPECT_NEAR(se.final_variance, ue.final_variance, 1e-14 * ue.final_variance);
  }
}

TEST(SpatialRecursion, ReadoutAloneSeesInputStructure) {
  // depth 1 has no locally connected layer, so the shared readout acts on the raw input
  for (auto kind : {NetKind::CNN, NetKind::LCN}) {
    auto s = spatial_cov_recursion_exact(Matrix::Ones(16, 16), conv(kind, 1, 32, 16));
    auto u = spatial_cov_recursion_exact(Matrix::Identity(16, 16), conv(kind, 1, 32, 16));
    EXPECT_NEAR(s.final_variance, 2.0 / 32, 1e-15);
    EXPECT_NEAR(u.final_variance, 2.0 / (32 * 16), 1e-15);
  }
}

TEST(SpatialRecursion, LcnMeanOffDiagonalZero) {
  auto r = spatial_cov_recursion(ideal_state(true, 8), conv(NetKind::LCN, 4, 16, 8));
  for (std::size_t l = 1; l < r.layers.size(); ++l) {
    Matrix m = r.layers[l].mean_kernel;
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j)
        if (i != j) EXPECT_EQ(m(i, j), 0.0);
  }
}

TEST(SpatialRecursion, MeanDepthInvariant) {
  auto r = spatial_cov_recursion(ideal_state(true, 8), conv(NetKind::CNN, 6, 16, 8));
  for (const auto& st : r.layers)
    for (Index i = 0; i < 8; ++i) EXPECT_NEAR(st.mean_kernel(i, i), 1.0, 1e-14);
  EXPECT_NEAR(r.final_mean, 1.0, 1e-14);
}

TEST(SpatialRecursion, SizeScalingCnnVersusLcn) {
  auto v = [](NetKind k, int S) {
    Matrix in = k == NetKind::CNN ? Matrix(Matrix::Ones(S, S)) : Matrix(Matrix::Identity(S, S));
    return spatial_cov_recursion_exact(in, conv(k, 16, 64, S)).final_variance;
  };
  double cnn = v(NetKind::CNN, 64) / v(NetKind::CNN, 8);
  double lcn = v(NetKind::LCN, 64) / v(NetKind::LCN, 8);
  EXPECT_GE(cnn, 0.8);
  EXPECT_LE(cnn, 1.25);
  EXPECT_LE(lcn, 0.3);
}

TEST(SpatialRecursion, RejectsFcAndNonCircular) {
  EXPECT_THROW(spatial_cov_recursion(ideal_state(true, 4), ArchitectureSpec::uniform(NetKind::FC, 2, 8)),
               InvalidInput);
  auto spec = conv(NetKind::CNN, 2, 8, 4);
  spec.circular = false;
  EXPECT_THROW(spatial_cov_recursion(ideal_state(true, 4), spec), InvalidInput);
}

TEST(SpatialRecursion, ExactMemoryGuard) {
  EXPECT_THROW(spatial_cov_recursion_exact(Matrix::Ones(64, 64), conv(NetKind::CNN, 2, 8, 64), 1 << 20),
               ResourceLimit);
}

TEST(InputState, IdealKernels) {
  auto s = make_input_state(true, 4, 100, 1);
  EXPECT_EQ(s.ideal.mean_kernel, Matrix::Ones(4, 4));
  auto u = make_input_state(false, 4, 100, 1);
  EXPECT_EQ(u.ideal.mean_kernel, Matrix::Identity(4, 4));
  EXPECT_EQ(u.ideal.diag_cov, Matrix::Zero(4, 4));
}

TEST(InputState, RawUnstructuredRealizedKernel) {
  auto u = make_input_state(false, 32, 100, 7);
  Matrix K = u.realized().mean_kernel;
  double off = 0;
  int n = 0;
  for (Index i = 0; i < 32; ++i) {
    EXPECT_NEAR(K(i, i), 1.0, 1e-12);
    for (Index j = i + 1; j < 32; ++j) { off += std::abs(K(i, j)); ++n; }
  }
  off /= n;
  // E|z| for z ~ N(0, 1/100) is 0.0798
  EXPECT_GT(off, 0.05);
  EXPECT_LT(off, 0.11);
  auto s = make_input_state(true, 8, 100, 7);
  EXPECT_LT((s.realized().mean_kernel - Matrix::Ones(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sampler, SingleUnitChiSquare) {
  auto spec = ArchitectureSpec::uniform(NetKind::FC, 1, 1);
  auto st = sample_finite_network_kernels(spec, Matrix::Ones(1, 1), 10000, 3);
  EXPECT_NEAR(st.top_var(0, 0), 2.0, 3 * st.top_var_se(0, 0));
  EXPECT_NEAR(st.top_mean(0, 0), 1.0, 0.05);
}

TEST(Sampler, FcMeanDepthInvariant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Matrix X(3, 10);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
  Matrix L0 = X * X.transpose() / 10.0;
  auto st = sample_finite_network_kernels(ArchitectureSpec::uniform(NetKind::FC, 4, 16), X, 4000, 5);
  for (std::size_t l = 0; l < st.layer_mean.size(); ++l)
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j <= i; ++j)
        EXPECT_LT(std::abs(st.layer_mean[l](i, j) - L0(i, j)), 4 * st.layer_mean_se[l](i, j) + 1e-12)
            << l << " " << i << j;
}

TEST(Sampler, FcExactRecursionMatchesMc) {
  auto st = sample_finite_network_kernels(ArchitectureSpec::uniform(NetKind::FC, 6, 8), Matrix::Ones(1, 1), 10000, 4);
  auto c = fc_cov_recursion(scalar(1), std::vector<double>(6, 8), CovMode::Exact);
  EXPECT_LT(std::abs(st.top_var(0, 0) - c(0, 0, 0, 0)), 3 * st.top_var_se(0, 0));
}

TEST(Sampler, KernelSpaceMatchesWeightSpace) {
  for (auto kind : {NetKind::CNN, NetKind::LCN}) {
    auto spec = conv(kind, 3, 6, 8);
    spec.input_channels = 20;
    auto in = make_input_state(true, 8, 20, 11);
    SamplerOptions ks, ws;
    ws.mode = SamplerMode::WeightSpace;
    auto a = sample_finite_network_kernels(spec, in.raw, 3000, 1, ks);
    auto b = sample_finite_network_kernels(spec, in.raw, 3000, 2, ws);
    double se_m = std::sqrt(a.top_var(0, 0) / 3000 + b.top_var(0, 0) / 3000);
    EXPECT_LT(std::abs(a.top_mean(0, 0) - b.top_mean(0, 0)), 4 * se_m);
    double se_v = std::hypot(a.top_var_se(0, 0), b.top_var_se(0, 0));
    EXPECT_LT(std::abs(a.top_var(0, 0) - b.top_var(0, 0)), 4 * se_v);
  }
}

TEST(Sampler, SpatialExactRecursionMatchesMc) {
  for (auto kind : {NetKind::CNN, NetKind::LCN})
    for (bool structured : {true, false}) {
      auto spec = conv(kind, 4, 8, 8);
      auto in = make_input_state(structured, 8, 100, 21);
      auto st = sample_finite_network_kernels(spec, in.raw, 4000, 9);
      auto e = spatial_cov_recursion_exact(in.realized().mean_kernel, spec);
      EXPECT_LT(std::abs(st.top_var(0, 0) - e.final_variance), 3 * st.top_var_se(0, 0))
          << int(kind) << structured;
    }
}

TEST(Sampler, ReadoutOnlyMatchesRecursion) {
  for (auto kind : {NetKind::CNN, NetKind::LCN})
    for (auto mode : {SamplerMode::KernelSpace, SamplerMode::WeightSpace}) {
      auto spec = conv(kind, 1, 4, 8);
      auto in = make_input_state(true, 8, 100, 5);
      SamplerOptions opt;
      opt.mode = mode;
      auto st = sample_finite_network_kernels(spec, in.raw, 4000, 12, opt);
      auto e = spatial_cov_recursion_exact(in.realized().mean_kernel, spec);
      EXPECT_LT(std::abs(st.top_var(0, 0) - e.final_variance), 3 * st.top_var_se(0, 0)) << int(kind);
    }
}

TEST(Sampler, LcnOffDiagonalMeanNearZero) {
  auto spec = conv(NetKind::LCN, 3, 8, 8);
  auto in = make_input_state(true, 8, 100, 4);
  auto st = sample_finite_network_kernels(spec, in.raw, 2000, 6);
  ASSERT_EQ(st.layer_mean.size(), 3u);
  for (std::size_t l = 0; l + 1 < st.layer_mean.size(); ++l)
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j)
        if (i != j) EXPECT_LT(std::abs(st.layer_mean[l](i, j)), 4 * st.layer_mean_se[l](i, j) + 1e-12);
}

TEST(Sampler, DeterministicPerSeed) {
  auto spec = conv(NetKind::CNN, 2, 4, 6);
  auto in = make_input_state(false, 6, 10, 1);
  auto a = sample_finite_network_kernels(spec, in.raw, 200, 3);
  auto b = sample_finite_network_kernels(spec, in.raw, 200, 3);
  EXPECT_EQ(a.top_var, b.top_var);
  EXPECT_EQ(a.top_mean, b.top_mean);
}

TEST(Sampler, ResourceGuard) {
  SamplerOptions opt;
  opt.max_elements = 100;
  auto in = make_input_state(true, 32, 10, 1);
  EXPECT_THROW(sample_finite_network_kernels(conv(NetKind::CNN, 2, 64, 32), in.raw, 10, 1, opt), ResourceLimit);
  EXPECT_THROW(sample_finite_network_kernels(conv(NetKind::CNN, 2, 4, 32), in.raw, 1, 1), InvalidInput);
}

TEST(Jackknife, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::gamma_distribution<double> gam(2.0, 1.0);
  std::vector<double> x(200);
  for (auto& v : x) v = gam(rng);
  double var, se;
  variance_with_jackknife(x, var, se);
  const double n = 200;
  std::vector<double> loo;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double m = 0, q = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (i != k) m += x[i];
    m /= n - 1;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (i != k) q += (x[i] - m) * (x[i] - m);
    loo.push_back(q / (n - 2));
  }
  double lm = 0;
  for (double v : loo) lm += v / n;
  double js = 0;
  for (double v : loo) js += (v - lm) * (v - lm);
  js = std::sqrt((n - 1) / n * js);
  double m = 0, q = 0;
  for (double v : x) m += v / n;
  for (double v : x) q += (v - m) * (v - m);
  EXPECT_NEAR(var, q / (n - 1), 1e-12 * var);
  EXPECT_NEAR(se, js, 1e-9 * js);
}
