#include "kernelflow/toy_evidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kernelflow/errors.hpp"
#include "kernelflow/parallel.hpp"
#include "kernelflow/seed_stream.hpp"

namespace kernelflow {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Matrix normal_matrix(Index r, Index c, double sd, Rng& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = sd * g(rng);
  return m;
}

// R with R R^T distributed as (1/H) W W^T, W ~ N(0, 1/X_dim) of shape X_dim x H.
Matrix draw_gram_root(int X_dim, int H, Rng& rng) {
  const double c = 1.0 / std::sqrt(static_cast<double>(H));
  if (H < X_dim) return c * normal_matrix(X_dim, H, 1.0 / std::sqrt(static_cast<double>(X_dim)), rng);
  // Bartlett: W W^T * X_dim ~ Wishart(I, H)
  std::normal_distribution<double> g;
  Matrix B = Matrix::Zero(X_dim, X_dim);
  for (int i = 0; i < X_dim; ++i) {
    std::chi_squared_distribution<double> chi(static_cast<double>(H - i));
    B(i, i) = std::sqrt(chi(rng));
    for (int j = 0; j < i; ++j) B(i, j) = g(rng);
  }
  return (c / std::sqrt(static_cast<double>(X_dim))) * B;
}

struct LikelihoodContext {
  const Matrix& X;
  const Matrix& Y;
  double sigma;
  bool low_rank;
  Matrix A;      // X^T X
  Matrix Q;      // X^T Y Y^T X
  double trS;    // tr(Y Y^T)
  LikelihoodContext(const Matrix& x, const Matrix& y, double s, bool lr) : X(x), Y(y), sigma(s), low_rank(lr) {
    if (low_rank) {
      A = X.transpose() * X;
      Matrix XtY = X.transpose() * Y;
      Q = XtY * XtY.transpose();
    }
    trS = Y.squaredNorm();
  }

  double loglik(const Matrix& R) const {
    const double P = static_cast<double>(X.rows()), ny = static_cast<double>(Y.cols());
    const double s2 = sigma * sigma;
    double logdet, quad;
    if (low_rank) {
      const Index r = R.cols();
      Matrix inner = R.transpose() * A * R;
      inner.diagonal().array() += s2;
      Eigen::LLT<Matrix> llt(inner);
      if (llt.info() != Eigen::Success) throw SingularKernel("toy likelihood: inner factorization failed");
      const Matrix Lc = llt.matrixL();
      logdet = P * std::log(s2) + 2.0 * Lc.diagonal().array().log().sum() - static_cast<double>(r) * std::log(s2);
      Matrix RQR = R.transpose() * Q * R;
      quad = (trS - llt.solve(RQR).trace()) / s2;
    } else {
      Matrix XR = X * R;
      Matrix C = XR * XR.transpose();
      C.diagonal().array() += s2;
      Eigen::LLT<Matrix> llt(C);
      if (llt.info() != Eigen::Success) throw SingularKernel("toy likelihood: covariance factorization failed");
      const Matrix Lc = llt.matrixL();
      logdet = 2.0 * Lc.diagonal().array().log().sum();
      quad = Lc.triangularView<Eigen::Lower>().solve(Y).squaredNorm();
    }
    return -0.5 * (ny * (P * kLog2Pi + logdet) + quad);
  }
};

void check_common(const Matrix& X, const Matrix& Y, int H, double sigma, long n) {
  if (H < 1) throw InvalidInput("toy evidence: H must be >= 1");
  if (!(sigma > 0.0)) throw InvalidInput("toy evidence: sigma must be positive");
  if (n < 2) throw InvalidInput("toy evidence: n_samples must be >= 2");
  if (X.rows() != Y.rows()) throw InvalidInput("toy evidence: X and Y row counts differ");
  if (X.cols() < 1) throw InvalidInput("toy evidence: X needs at least one column");
  if (!X.allFinite() || !Y.allFinite()) throw InvalidInput("toy evidence: non-finite data");
}

bool pick_low_rank(const Matrix& X, LikelihoodRoute route) {
  if (route == LikelihoodRoute::Dense) return false;
  if (route == LikelihoodRoute::LowRank) return true;
  return X.cols() < X.rows();
}

}  // namespace

Matrix Modifier::apply(const Matrix& X) const {
  switch (kind) {
    case Kind::ScaleInputs:
      return factor * X;
    case Kind::ZeroAllButFirst: {
      Matrix out = Matrix::Zero(X.rows(), X.cols());
      out.col(0) = X.col(0);
      return out;
    }
    default:
      return X;
  }
}

std::string Modifier::name() const {
  switch (kind) {
    case Kind::ScaleInputs:
      return "scale_inputs";
    case Kind::ZeroAllButFirst:
      return "zero_all_but_first";
    default:
      return "none";
  }
}

Matrix toy_targets(const Matrix& X, const Matrix& W, const Matrix& V, const Modifier& mod, double sigma,
                   const Matrix& noise) {
  return mod.apply(X) * W * V + sigma * noise;
}

ToyDataset generate_toy_dataset(std::uint64_t seed, int P, int X_dim, int Y_dim, int H_gen, double sigma,
                                const Modifier& modifier, int P_test) {
  if (P < 1 || X_dim < 1 || Y_dim < 1 || H_gen < 1 || P_test < 0)
    throw InvalidInput("generate_toy_dataset: counts must be >= 1");
  if (!(sigma > 0.0)) throw InvalidInput("generate_toy_dataset: sigma must be positive");
  ToyDataset d;
  d.H_gen = H_gen;
  d.modifier = modifier;
  d.sigma = sigma;
  d.seed = seed;
  auto rng = [&](const char* tag) { return Rng(seed_stream(seed, {"toy", tag})); };
  auto rX = rng("X"), rW = rng("W"), rV = rng("V"), rN = rng("noise"), rXt = rng("X_test"), rNt = rng("noise_test");
  d.X = normal_matrix(P, X_dim, 1.0, rX);
  d.generator.W = normal_matrix(X_dim, H_gen, 1.0 / std::sqrt(static_cast<double>(X_dim)), rW);
  d.generator.V = normal_matrix(H_gen, Y_dim, 1.0 / std::sqrt(static_cast<double>(H_gen)), rV);
  d.generator.noise = normal_matrix(P, Y_dim, 1.0, rN);
  d.Y = toy_targets(d.X, d.generator.W, d.generator.V, modifier, sigma, d.generator.noise);
  if (P_test > 0) {
    d.X_test = normal_matrix(P_test, X_dim, 1.0, rXt);
    d.generator.noise_test = normal_matrix(P_test, Y_dim, 1.0, rNt);
    d.Y_test = toy_targets(d.X_test, d.generator.W, d.generator.V, modifier, sigma, d.generator.noise_test);
  }
  return d;
}

void log_mean_exp(const std::vector<double>& v, double& value, double& std_error) {
  if (v.empty()) throw InvalidInput("log_mean_exp: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) throw NumericalError("log_mean_exp: non-finite log weights");
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  const double mean = s / n;
  double ss = 0.0;
  for (double x : v) {
    const double d = std::exp(x - m) - mean;
    ss += d * d;
  }
  value = m + std::log(mean);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  std_error = std::sqrt(var / n) / mean;
}

std::vector<double> mc_log_likelihoods(const Matrix& X, const Matrix& Y, int H, double sigma, long n_samples,
                                       std::uint64_t seed, LikelihoodRoute route) {
  check_common(X, Y, H, sigma, n_samples);
  const LikelihoodContext ctx(X, Y, sigma, pick_low_rank(X, route));
  const int X_dim = static_cast<int>(X.cols());
  std::vector<double> out(static_cast<std::size_t>(n_samples));
  const std::size_t chunks = 256;
  parallel_for(chunks, [&](std::size_t c) {
    const long lo = static_cast<long>(c) * n_samples / static_cast<long>(chunks);
    const long hi = static_cast<long>(c + 1) * n_samples / static_cast<long>(chunks);
    for (long s = lo; s < hi; ++s) {
      Rng rng(seed_stream(seed, {"mc", static_cast<std::uint64_t>(s)}));
      out[static_cast<std::size_t>(s)] = ctx.loglik(draw_gram_root(X_dim, H, rng));
    }
  });
  return out;
}

EvidenceEstimate mc_log_evidence(const Matrix& X, const Matrix& Y, int H, double sigma, long n_samples,
                                 std::uint64_t seed, LikelihoodRoute route) {
  EvidenceEstimate e;
  e.n_samples = n_samples;
  e.seed = seed;
  log_mean_exp(mc_log_likelihoods(X, Y, H, sigma, n_samples, seed, route), e.log_evidence, e.std_error);
  return e;
}

double closed_form_infinite_evidence(const Matrix& X, const Matrix& Y, double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("closed_form_infinite_evidence: sigma must be positive");
  if (X.rows() != Y.rows()) throw InvalidInput("closed_form_infinite_evidence: row counts differ");
  const double P = static_cast<double>(X.rows());
  Matrix C = X * X.transpose() / static_cast<double>(X.cols());
  C.diagonal().array() += sigma * sigma;
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success) throw SingularKernel("closed_form_infinite_evidence: factorization failed");
  const Matrix Lc = llt.matrixL();
  const double logdet = 2.0 * Lc.diagonal().array().log().sum();
  const double quad = Lc.triangularView<Eigen::Lower>().solve(Y).squaredNorm();
  return -0.5 * (static_cast<double>(Y.cols()) * (P * kLog2Pi + logdet) + quad);
}

PredictiveEstimate mc_predictive_logprob(const ToyDataset& train, const Matrix& X_test, const Matrix& Y_test, int H,
                                         double sigma, long n_samples, std::uint64_t seed) {
  if (X_test.rows() < 1 || X_test.rows() != Y_test.rows())
    throw InvalidInput("mc_predictive_logprob: test split must be non-empty and consistent");
  if (X_test.cols() != train.X.cols() || Y_test.cols() != train.Y.cols())
    throw InvalidInput("mc_predictive_logprob: test columns differ from train");
  Matrix Xa(train.X.rows() + X_test.rows(), train.X.cols());
  Xa << train.X, X_test;
  Matrix Ya(train.Y.rows() + Y_test.rows(), train.Y.cols());
  Ya << train.Y, Y_test;
  // same seed: joint and train likelihoods share every W_s
  const auto lt = mc_log_likelihoods(train.X, train.Y, H, sigma, n_samples, seed);
  const auto lj = mc_log_likelihoods(Xa, Ya, H, sigma, n_samples, seed);
  return predictive_from_loglik(lt, lj);
}

PredictiveEstimate predictive_from_loglik(const std::vector<double>& lt, const std::vector<double>& lj) {
  if (lt.size() != lj.size() || lt.size() < 2) throw InvalidInput("predictive: sample vectors must match");
  const double mt = *std::max_element(lt.begin(), lt.end());
  const double mj = *std::max_element(lj.begin(), lj.end());
  const double n = static_cast<double>(lt.size());
  double sa = 0, sb = 0, sbb = 0;
  std::vector<double> a(lt.size()), b(lt.size());
  for (std::size_t s = 0; s < lt.size(); ++s) {
    a[s] = std::exp(lj[s] - mj);
    b[s] = std::exp(lt[s] - mt);
    sa += a[s];
    sb += b[s];
    sbb += b[s] * b[s];
  }
  PredictiveEstimate p;
  p.log_prob = (mj + std::log(sa)) - (mt + std::log(sb));
  const double ma = sa / n, mb = sb / n;
  double vaa = 0, vbb = 0, vab = 0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    vaa += (a[s] - ma) * (a[s] - ma);
    vbb += (b[s] - mb) * (b[s] - mb);
    vab += (a[s] - ma) * (b[s] - mb);
  }
  vaa /= n - 1;
  vbb /= n - 1;
  vab /= n - 1;
  const double var = (vaa / (ma * ma) + vbb / (mb * mb) - 2.0 * vab / (ma * mb)) / n;
  p.std_error = std::sqrt(std::max(var, 0.0));
  p.ess = sb * sb / sbb;
  p.degenerate_weights = p.ess < 10.0;
  return p;
}

}  // namespace kernelflow
