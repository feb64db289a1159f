#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "kernelflow/errors.hpp"
#include "kernelflow/kernel_metrics.hpp"

using namespace kernelflow;

namespace {

Matrix random_pd(Index P, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix F(P, P + 2);
  for (Index i = 0; i < F.size(); ++i) F.data()[i] = g(rng);
  return F * F.transpose() / double(P + 2) + 0.1 * Matrix::Identity(P, P);
}

std::vector<int> balanced_labels(int C, int per_class) {
  std::vector<int> l;
  for (int i = 0; i < C * per_class; ++i) l.push_back(i % C);
  return l;
}

}  // namespace

TEST(Correlation, SelfIsOne) {
  std::mt19937_64 rng(1);
  KernelMatrix K(random_pd(5, rng));
  EXPECT_DOUBLE_EQ(kernel_correlation(K, K), 1.0);
}

TEST(Correlation, AffineInvariant) {
  std::mt19937_64 rng(2);
  Matrix A = random_pd(6, rng);
  KernelMatrix K(A), K2(3 * A + 0.5 * Matrix::Ones(6, 6));
  EXPECT_NEAR(kernel_correlation(K, K2), 1.0, 1e-15);
  KernelMatrix B(random_pd(6, rng));
  EXPECT_NEAR(kernel_correlation(K, B), kernel_correlation(B, K), 1e-15);
  EXPECT_NEAR(kernel_correlation(K, B), kernel_correlation(K2, B), 1e-13);
}

TEST(Correlation, MatchesDirectPearson) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix A = random_pd(5, rng), B = random_pd(5, rng);
    std::vector<double> x, y;
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) { x.push_back(A(i, j)); y.push_back(B(i, j)); }
    ASSERT_EQ(x.size(), 10u);
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < 10; ++k) { mx += x[k] / 10; my += y[k] / 10; }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < 10; ++k) {
      sxy += (x[k] - mx) * (y[k] - my);
      sxx += (x[k] - mx) * (x[k] - mx);
      syy += (y[k] - my) * (y[k] - my);
    }
    EXPECT_NEAR(kernel_correlation(KernelMatrix(A), KernelMatrix(B)), sxy / std::sqrt(sxx * syy), 1e-13);
  }
}

TEST(Correlation, DegenerateAndErrors) {
  bool deg = false;
  KernelMatrix I(Matrix::Identity(4, 4));
  std::mt19937_64 rng(4);
  EXPECT_EQ(kernel_correlation(I, KernelMatrix(random_pd(4, rng)), &deg), 0.0);
  EXPECT_TRUE(deg);
  EXPECT_THROW(kernel_correlation(I, KernelMatrix(Matrix::Identity(3, 3))), InvalidInput);
  EXPECT_THROW(kernel_correlation(KernelMatrix(Matrix::Identity(2, 2)), KernelMatrix(Matrix::Identity(2, 2))),
               InvalidInput);
}

TEST(SubspaceFraction, IdentityGivesClassCountOverP) {
  auto Y = one_hot({0, 1, 2, 0, 1, 0, 0});
  EXPECT_DOUBLE_EQ(subspace_variance_fraction(KernelMatrix(Matrix::Identity(7, 7)), Y), 3.0 / 7.0);
}

TEST(SubspaceFraction, OutputKernelIsFullyInside) {
  Matrix Y = one_hot(balanced_labels(3, 4));
  KernelMatrix K(Y * Y.transpose() / 3.0);
  EXPECT_NEAR(subspace_variance_fraction(K, Y), 1.0, 1e-14);
}

TEST(SubspaceFraction, MatchesGramSchmidtProjector) {
  std::mt19937_64 rng(5);
  Matrix Y = one_hot({0, 1, 1, 0, 0, 1});
  for (int rep = 0; rep < 10; ++rep) {
    Matrix K = random_pd(6, rng);
    // explicit orthonormal basis for span(Y)
    Matrix Q(6, 2);
    Vector q0 = Y.col(0).normalized();
    Vector q1 = Y.col(1) - q0.dot(Y.col(1)) * q0;
    Q.col(0) = q0;
    Q.col(1) = q1.normalized();
    double want = (Q * Q.transpose() * K).trace() / K.trace();
    EXPECT_NEAR(subspace_variance_fraction(KernelMatrix(K), Y), want, 1e-13);
    Matrix Yperm(6, 2);
    Yperm << Y.col(1), Y.col(0);
    EXPECT_NEAR(subspace_variance_fraction(KernelMatrix(K), Yperm), want, 1e-13);
  }
}

TEST(SubspaceFraction, ZeroTraceRejected) {
  EXPECT_THROW(subspace_variance_fraction(KernelMatrix(Matrix::Zero(3, 3)), one_hot({0, 1, 0})), InvalidInput);
}

TEST(SpectrumSlope, ExactPowerLaw) {
  Vector e(50);
  for (Index k = 0; k < 50; ++k) e(k) = 1.0 / double(k + 1);
  EXPECT_NEAR(spectrum_slope(e).slope, -1.0, 1e-10);
  EXPECT_NEAR(spectrum_slope(e, 0).slope, -1.0, 1e-10);
}

TEST(SpectrumSlope, Constant) {
  EXPECT_NEAR(spectrum_slope(Vector::Constant(20, 3.0)).slope, 0.0, 1e-14);
}

TEST(SpectrumSlope, NoisyPowerLaw) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.01);
  Vector e(100);
  for (Index k = 0; k < 100; ++k) e(k) = (1.0 + g(rng)) / double(k + 1);
  EXPECT_NEAR(spectrum_slope(e).slope, -1.0, 0.05);
}

TEST(SpectrumSlope, NonPositiveExcludedAndFlagged) {
  Vector e(8);
  e << 1, 0.5, 1.0 / 3, 0.25, 0.2, 1.0 / 6, 0, -1e-12;
  auto f = spectrum_slope(e, 0);
  EXPECT_TRUE(f.excluded_nonpositive);
  EXPECT_EQ(f.points, 6);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_THROW(spectrum_slope(e, 3), InvalidInput);
}

TEST(GpScore, OutputAlignedBeatsIdentity) {
  Matrix Y = one_hot(balanced_labels(4, 10));
  KernelMatrix aligned(Y * Y.transpose() / 4.0 + 1e-6 * Matrix::Identity(40, 40));
  KernelMatrix I(Matrix::Identity(40, 40));
  EXPECT_GT(gp_score(aligned, Y).score, gp_score(I, Y).score);
}

TEST(GpScore, ScaleInvariant) {
  std::mt19937_64 rng(7);
  Matrix K = random_pd(12, rng);
  Matrix Y = one_hot(balanced_labels(3, 4));
  double base = gp_score(KernelMatrix(K), Y).score;
  for (double c : {0.1, 10.0}) EXPECT_NEAR(gp_score(KernelMatrix(c * K), Y).score, base, 1e-6);
}

TEST(GpScore, ZeroTargetsDegenerate) {
  std::mt19937_64 rng(8);
  EXPECT_TRUE(gp_score(KernelMatrix(random_pd(5, rng)), Matrix::Zero(5, 2)).degenerate);
}

TEST(GpScore, MonotoneUnderAddingOutputKernel) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix Y = one_hot(balanced_labels(3, 5));
    Matrix K = random_pd(15, rng);
    double beta = u(rng);
    double base = gp_score(KernelMatrix(K), Y).score;
    double plus = gp_score(KernelMatrix(K + beta * Y * Y.transpose() / 3.0), Y).score;
    EXPECT_GE(plus, base - 1e-8) << rep;
  }
}

TEST(Labels, OneHotAndCsv) {
  Matrix Y = one_hot({2, 0, 2});
  EXPECT_EQ(Y.cols(), 2);
  EXPECT_EQ(Y.row(0).sum(), 1.0);
  EXPECT_EQ(Y(0, 1), 1.0);
  EXPECT_EQ(Y(1, 0), 1.0);
  std::string path = ::testing::TempDir() + "labels.csv";
  {
    std::ofstream f(path);
    f << "index,class\n1,0\n0,5\n2,5\n";
  }
  auto l = read_label_csv(path);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], 5);
  EXPECT_EQ(l[1], 0);
}
