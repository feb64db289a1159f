#include "kernelflow/gp_sumkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kernelflow/errors.hpp"

namespace kernelflow {
namespace {

Eigen::LLT<Matrix> factor_combined(const SumKernelModel& m) {
  Eigen::LLT<Matrix> llt(m.combined());
  if (llt.info() != Eigen::Success || !Matrix(llt.matrixL()).allFinite())
    throw SingularKernel("sum kernel is not positive definite");
  const Matrix L = llt.matrixL();
  if ((L.diagonal().array() <= 0.0).any()) throw SingularKernel("sum kernel is not positive definite");
  return llt;
}

Vector projected(const Vector& g, const Vector& lam, double lmin) {
  Vector p = g;
  for (Index i = 0; i < g.size(); ++i)
    if (lam(i) <= lmin && g(i) < 0.0) p(i) = 0.0;
  return p;
}

}  // namespace

void SumKernelModel::check() const {
  if (components.empty()) throw InvalidInput("sum kernel needs at least one component");
  if (weights.size() != static_cast<Index>(components.size()))
    throw InvalidInput("sum kernel: one weight per component required");
  for (const auto& k : components)
    if (k.size() != size()) throw InvalidInput("sum kernel: components differ in size");
  if (!weights.allFinite() || (weights.array() <= 0.0).any())
    throw InvalidInput("sum kernel: weights must be positive");
}

Matrix SumKernelModel::combined() const {
  Matrix K = Matrix::Zero(size(), size());
  for (std::size_t i = 0; i < components.size(); ++i) K += weights(static_cast<Index>(i)) * components[i].entries();
  return K;
}

double log_marginal(const SumKernelModel& model, const Matrix& Y) {
  model.check();
  if (Y.rows() != model.size()) throw InvalidInput("log_marginal: Y has wrong row count");
  auto llt = factor_combined(model);
  const double P = static_cast<double>(Y.rows()), N = static_cast<double>(Y.cols());
  const Matrix L = llt.matrixL();
  double logdet = 2.0 * L.diagonal().array().log().sum();
  Matrix Z = L.triangularView<Eigen::Lower>().solve(Y);
  return -0.5 * Z.squaredNorm() - 0.5 * N * logdet - 0.5 * N * P * std::log(2.0 * std::numbers::pi);
}

GradientFisher gradient_and_fisher(const SumKernelModel& model, const Matrix& Y) {
  model.check();
  if (Y.rows() != model.size()) throw InvalidInput("gradient_and_fisher: Y has wrong row count");
  auto llt = factor_combined(model);
  const Index m = model.weights.size();
  const double N = static_cast<double>(Y.cols());
  const Matrix KiY = llt.solve(Y);
  std::vector<Matrix> La(static_cast<std::size_t>(m));
  GradientFisher out{Vector(m), Matrix(m, m)};
  for (Index a = 0; a < m; ++a) {
    const Matrix& Ka = model.components[static_cast<std::size_t>(a)].entries();
    La[static_cast<std::size_t>(a)] = llt.solve(Ka);
    out.gradient(a) = 0.5 * (KiY.transpose() * Ka * KiY).trace() - 0.5 * N * La[static_cast<std::size_t>(a)].trace();
  }
  for (Index a = 0; a < m; ++a)
    for (Index b = a; b < m; ++b) {
      double v = 0.5 * N * La[static_cast<std::size_t>(a)].cwiseProduct(La[static_cast<std::size_t>(b)].transpose()).sum();
      out.fisher(a, b) = out.fisher(b, a) = v;
    }
  return out;
}

FitResult natural_gradient_fit(const SumKernelModel& init, const Matrix& Y, const FitOptions& opt) {
  init.check();
  FitResult r;
  r.model = init;
  Vector& lam = r.model.weights;
  const double lmin = init.lambda_min;
  lam = lam.cwiseMax(lmin);
  double f = log_marginal(r.model, Y);
  r.trajectory.push_back(lam);
  for (r.iterations = 0; r.iterations < opt.max_iters; ++r.iterations) {
    auto gf = gradient_and_fisher(r.model, Y);
    if (projected(gf.gradient, lam, lmin).lpNorm<Eigen::Infinity>() <= opt.tol) {
      r.converged = true;
      break;
    }
    const Index m = lam.size();
    const double damping = opt.damping_rel * gf.fisher.trace() / static_cast<double>(m);
    Vector step = (gf.fisher + damping * Matrix::Identity(m, m)).ldlt().solve(gf.gradient);
    bool accepted = false;
    for (int halving = 0; halving < 60 && !accepted; ++halving) {
      SumKernelModel trial = r.model;
      trial.weights = (lam + std::ldexp(1.0, -halving) * step).cwiseMax(lmin);
      if (trial.weights == lam) break;
      try {
        double ft = log_marginal(trial, Y);
        if (ft >= f) {
          lam = trial.weights;
          f = ft;
          accepted = true;
        }
      } catch (const SingularKernel&) {
      }
    }
    if (!accepted) {
      // no ascent direction left at working precision
      auto g2 = gradient_and_fisher(r.model, Y);
      r.converged = projected(g2.gradient, lam, lmin).lpNorm<Eigen::Infinity>() <= opt.tol;
      break;
    }
    r.trajectory.push_back(lam);
  }
  r.log_marginal = f;
  r.at_floor = (lam.array() <= lmin).any();
  return r;
}

nlohmann::json fit_report(const FitResult& r) {
  nlohmann::json lam = nlohmann::json::array();
  for (Index i = 0; i < r.model.weights.size(); ++i) lam.push_back(r.model.weights(i));
  return {{"lambda", lam},
          {"log_marginal", r.log_marginal},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"at_floor", r.at_floor}};
}

}  // namespace kernelflow
