#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "kernelflow/kernel_core.hpp"
#include "kernelflow/seed_stream.hpp"

namespace kernelflow {

/// Widths N_1..N_{L+1}; the last entry is the output count Y.
struct WidthProfile {
  std::vector<double> widths;

  int L() const { return static_cast<int>(widths.size()) - 1; }
  /// Geometric mean of N_1..N_l (1 for l = 0).
  double geo_upto(int l) const;
  /// Geometric mean of N_{l+1}..N_{L+1} (1 for l = L+1).
  double geo_after(int l) const;
  void check() const;
  static WidthProfile uniform(double N, double Y, int L);
};

enum class PathMethod { MAP, Langevin };

struct PathDiagnostics {
  double k0_jitter = 0.0;
  double kout_jitter = 0.0;
  double residual = 0.0;
  int max_t_iterations = 0;
  int degenerate_eigenvalues = 0;
};

struct KernelPath {
  std::vector<KernelMatrix> kernels;  // K_0 .. K_{L+1}
  PathMethod method = PathMethod::MAP;
  PathDiagnostics diagnostics;
  Vector t;  // Langevin: per-eigenvalue ratio in the symmetrized basis
};

/// K_l = (N_{l<}/N_{<=l})^{l(L+1-l)/(L+1)} geodesic_power(K0, K_out, l/(L+1)).
KernelPath map_kernel_path(const KernelMatrix& K0, const KernelMatrix& K_out, const WidthProfile& profile);

struct TRoot {
  double t = 1.0;
  double u = 0.0;  // t - 1, kept separately for precision near t = 1
  int iterations = 0;
  bool degenerate = false;
  double residual = 0.0;
};

/// Root of (1 + ratio (t-1)) t^L = s with t > max(0, 1 - 1/ratio).
TRoot solve_t_ratio(double s, double ratio, int L);

/// Stationary kernels for hidden width N, output count Y and L hidden layers.
KernelPath langevin_kernel_path(const KernelMatrix& K0, const KernelMatrix& K_out, double N, double Y, int L);

struct ObjectiveResidual {
  double objective = 0.0;
  double residual = 0.0;  // max |dObjective/dK_l| over interior layers
};

/// With has_output_term the last kernel is a fixed target and widths has one
/// entry per transition. Without it every kernel after K_0 is free.
ObjectiveResidual objective_and_residual(const KernelPath& path, const WidthProfile& profile, PathMethod method,
                                         bool has_output_term = true);

struct WishartModeCheck {
  Matrix uncorrected_mode;
  bool degenerate = false;
  Matrix corrected_argmax;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Mode of Wishart(K; J/N, N) and the numeric argmax of
/// (N/2) log|K| - (N/2) tr(J^{-1} K).
WishartModeCheck wishart_mode_correction_check(const KernelMatrix& J, double N);

struct ReparamSample {
  Matrix V;
  Matrix R;  // V V^T / N
  Matrix K;  // U^T R U
};

ReparamSample sample_reparam(const KernelMatrix& J, int N, Rng& rng);

struct LangevinOptions {
  double dt = 1e-2;
  long n_steps = 100000;
  long burn_in = 10000;
  int batches = 20;
  std::uint64_t seed = 0;
  std::vector<Matrix> initial_V;  // empty: draw from the prior
};

struct LangevinResult {
  std::vector<Matrix> mean_R;   // per hidden layer
  std::vector<Matrix> mean_K;   // K_1 .. K_L
  std::vector<Matrix> se_K;     // batch-means standard errors
  std::vector<Matrix> se_R;
  long halvings = 0;
};

/// Euler-Maruyama on dV = dt/2 grad + dXi for L hidden layers of width N.
/// K_out empty means prior only; otherwise the likelihood is that of Y output
/// columns with Y Y^T = Y K_out.
LangevinResult langevin_simulate(const KernelMatrix& K0, const std::optional<KernelMatrix>& K_out, int N, int Y,
                                 int L, const LangevinOptions& opt);

/// Reverse-mode gradient of the log joint with respect to every V_l.
/// Exposed for finite-difference checks.
std::vector<Matrix> langevin_gradient(const KernelMatrix& K0, const Matrix* YYt, double Y, const std::vector<Matrix>& V,
                                      double* log_joint = nullptr);

nlohmann::json path_to_json(const KernelPath& path);

}  // namespace kernelflow
