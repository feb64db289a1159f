#pragma once

#include <vector>

#include "json.hpp"
#include "kernelflow/kernel_core.hpp"

namespace kernelflow {

/// K = sum_i lambda_i K_i with fixed components and positive weights.
struct SumKernelModel {
  std::vector<KernelMatrix> components;
  Vector weights;
  double lambda_min = 1e-10;

  Index size() const { return components.empty() ? 0 : components.front().size(); }
  Matrix combined() const;
  void check() const;
};

/// Exact Gaussian log density of the N columns of Y (P x N), 2 pi included.
double log_marginal(const SumKernelModel& model, const Matrix& Y);

struct GradientFisher {
  Vector gradient;  // g_a = 1/2 tr(L_a L_y) - N/2 tr(L_a)
  Matrix fisher;    // F_ab = N/2 tr(L_a L_b)
};

GradientFisher gradient_and_fisher(const SumKernelModel& model, const Matrix& Y);

struct FitOptions {
  int max_iters = 500;
  double tol = 1e-8;           // on the projected gradient, infinity norm
  double damping_rel = 1e-6;   // damping = damping_rel * tr(F) / components
};

struct FitResult {
  SumKernelModel model;
  double log_marginal = 0.0;
  int iterations = 0;
  bool converged = false;
  bool at_floor = false;  // some weight pinned at lambda_min
  std::vector<Vector> trajectory;
};

/// Natural-gradient ascent lambda += (F + damping I)^{-1} g, projected onto
/// lambda >= lambda_min, halving the step until the likelihood does not drop.
FitResult natural_gradient_fit(const SumKernelModel& init, const Matrix& Y, const FitOptions& opt = {});

/// {"lambda": [...], "log_marginal": v, "iterations": k, "converged": b}
nlohmann::json fit_report(const FitResult& r);

}  // namespace kernelflow
