#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kernelflow/kernel_core.hpp"

namespace kernelflow {

enum class NetKind { FC, CNN, LCN };

/// How the last layer reduces the S locations to one kernel value.
///   SpatialMean:     pointwise final layer of width N_{L+1} with weights shared
///                    across locations for every kind, reported as the spatial
///                    mean of its diagonal, (1/(S N)) ||A||_F^2.
///   FullImagePatch:  one filter covering the whole image, J = tr(L)/S.
enum class Readout { SpatialMean, FullImagePatch };

struct ArchitectureSpec {
  NetKind kind = NetKind::FC;
  int depth = 1;                 // L + 1 layers, the last one being the readout for CNN/LCN
  std::vector<double> widths;    // N_1 .. N_{L+1}
  int spatial_size = 1;          // S
  std::vector<int> displacements{-1, 0, 1};
  int input_channels = 100;      // M_0
  bool circular = true;
  Readout readout = Readout::SpatialMean;

  int D() const { return static_cast<int>(displacements.size()); }
  void check() const;
  static ArchitectureSpec uniform(NetKind kind, int depth, double N, int S = 1);
};

/// Mean and full covariance Cov[K_ij, K_kl] of a P x P stochastic kernel.
class KernelCovariance4 {
 public:
  KernelCovariance4() = default;
  explicit KernelCovariance4(const Matrix& mean);
  Index size() const { return mean_.rows(); }
  const Matrix& mean() const { return mean_; }
  double& operator()(Index i, Index j, Index k, Index l) { return cov_[flat(i, j, k, l)]; }
  double operator()(Index i, Index j, Index k, Index l) const { return cov_[flat(i, j, k, l)]; }
  const std::vector<double>& raw() const { return cov_; }
  std::vector<double>& raw() { return cov_; }

 private:
  std::size_t flat(Index i, Index j, Index k, Index l) const {
    const auto P = static_cast<std::size_t>(mean_.rows());
    return ((static_cast<std::size_t>(i) * P + static_cast<std::size_t>(j)) * P + static_cast<std::size_t>(k)) * P +
           static_cast<std::size_t>(l);
  }
  Matrix mean_;
  std::vector<double> cov_;
};

enum class CovMode { Exact, Approximate };

/// Fully-connected recursion from the fixed input kernel through every width.
KernelCovariance4 fc_cov_recursion(const KernelMatrix& L0, const std::vector<double>& widths, CovMode mode);

/// Mean cross-location kernel and covariance of its diagonal entries.
struct SpatialKernelState {
  Matrix mean_kernel;
  Matrix diag_cov;
};

struct SpatialRecursion {
  std::vector<SpatialKernelState> layers;  // input followed by every hidden layer
  double final_mean = 0.0;
  double final_variance = 0.0;
};

/// Diagonal-tracking recursion (drops the O(1/N) covariance feedback).
SpatialRecursion spatial_cov_recursion(const SpatialKernelState& input, const ArchitectureSpec& spec);

/// Recursion over the full S^4 covariance, exact for linear networks.
/// Throws ResourceLimit when the two S^4 buffers exceed max_bytes.
SpatialRecursion spatial_cov_recursion_exact(const Matrix& input_mean, const ArchitectureSpec& spec,
                                             std::size_t max_bytes = std::size_t{1} << 30);

struct InputState {
  SpatialKernelState ideal;
  Matrix raw;  // S x M0, every row scaled to squared norm M0
  SpatialKernelState realized() const;
};

InputState make_input_state(bool structured, int S, int M0, std::uint64_t seed);

enum class SamplerMode { KernelSpace, WeightSpace };

struct SamplerOptions {
  SamplerMode mode = SamplerMode::KernelSpace;
  std::size_t max_elements = std::size_t{1} << 26;  // P * S * N per layer
};

struct KernelSampleStats {
  long n_networks = 0;
  std::vector<Matrix> layer_mean;  // per layer (index 0 = first layer output)
  std::vector<Matrix> layer_mean_se;
  Matrix top_mean;      // FC: P x P kernel; CNN/LCN: 1 x 1 readout
  Matrix top_var;
  Matrix top_var_se;    // jackknife
};

/// FC: `input` is P x M0 and the statistics cover the top P x P kernel.
/// CNN/LCN: `input` is S x M0 for one datapoint and the top is the readout scalar.
KernelSampleStats sample_finite_network_kernels(const ArchitectureSpec& spec, const Matrix& input, long n_networks,
                                                std::uint64_t seed, const SamplerOptions& opt = {});

/// Sample variance of x and its closed-form jackknife standard error.
void variance_with_jackknife(const std::vector<double>& x, double& var, double& se);

}  // namespace kernelflow
