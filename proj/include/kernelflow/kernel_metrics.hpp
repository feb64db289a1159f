#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "kernelflow/gp_sumkernel.hpp"
#include "kernelflow/kernel_core.hpp"

namespace kernelflow {

/// Pearson correlation over the strict upper triangles. Returns 0 and sets
/// *degenerate when either side is constant there.
double kernel_correlation(const KernelMatrix& Ka, const KernelMatrix& Kb, bool* degenerate = nullptr);

/// tr(P_Y K) / tr(K), P_Y the orthogonal projector onto span(Y).
double subspace_variance_fraction(const KernelMatrix& K, const Matrix& Y);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
  bool excluded_nonpositive = false;
};

/// Least-squares slope of log(eigenvalue) against log(rank), ranks starting
/// at 1, after dropping the top drop_count values.
SlopeFit spectrum_slope(const Vector& eigenvalues_desc, int drop_count = 1);

struct GpScore {
  double score = 0.0;
  bool degenerate = false;
  FitResult fit;
};

/// Maximized log marginal of lambda1 K + lambda2 I on Y.
GpScore gp_score(const KernelMatrix& K, const Matrix& Y, const FitOptions& opt = {});

/// One-hot P x C matrix, columns in ascending class order.
Matrix one_hot(const std::vector<int>& labels);

/// Parses "index,class" CSV (header required) into labels ordered by index.
std::vector<int> read_label_csv(const std::string& path);

struct MetricReport {
  double correlation = 0.0;
  double subspace_fraction = 0.0;
  double spectrum_slope = 0.0;
  double gp_score = 0.0;
};

MetricReport metric_report(const KernelMatrix& K, const KernelMatrix& reference, const Matrix& Y,
                           int drop_count = 1);
nlohmann::json to_json(const MetricReport& r);

}  // namespace kernelflow
