#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kernelflow/kernel_core.hpp"

namespace kernelflow {

struct Modifier {
  enum class Kind { None, ScaleInputs, ZeroAllButFirst };
  Kind kind = Kind::None;
  double factor = 1.0;  // ScaleInputs only

  static Modifier none() { return {}; }
  static Modifier scale_inputs(double f) { return {Kind::ScaleInputs, f}; }
  static Modifier zero_all_but_first() { return {Kind::ZeroAllButFirst, 1.0}; }
  /// The input the generating network actually sees.
  Matrix apply(const Matrix& X) const;
  std::string name() const;
};

/// Weights and noise realized while generating a dataset.
struct ToyGenerator {
  Matrix W;      // X_dim x H_gen, variance 1/X_dim
  Matrix V;      // H_gen x Y_dim, variance 1/H_gen
  Matrix noise;  // P x Y_dim standard normal
  Matrix noise_test;
};

struct ToyDataset {
  Matrix X, Y;            // original (unmodified) inputs and targets
  Matrix X_test, Y_test;  // may be empty
  int H_gen = 1;
  Modifier modifier;
  double sigma = 0.1;
  std::uint64_t seed = 0;
  ToyGenerator generator;
};

ToyDataset generate_toy_dataset(std::uint64_t seed, int P, int X_dim, int Y_dim, int H_gen, double sigma,
                                const Modifier& modifier, int P_test = 100);

/// Targets X~ W V + sigma noise for given weights; used by generation and tests.
Matrix toy_targets(const Matrix& X, const Matrix& W, const Matrix& V, const Modifier& mod, double sigma,
                   const Matrix& noise);

struct EvidenceEstimate {
  double log_evidence = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  std::uint64_t seed = 0;
};

enum class LikelihoodRoute { Auto, Dense, LowRank };

/// log of the prior-sample mean of p(Y | W_s), W_s drawn for sample s from
/// seed_stream(seed, {"mc", s}).
EvidenceEstimate mc_log_evidence(const Matrix& X, const Matrix& Y, int H, double sigma, long n_samples,
                                 std::uint64_t seed, LikelihoodRoute route = LikelihoodRoute::Auto);

/// Per-sample log p(Y | W_s) in sample order.
std::vector<double> mc_log_likelihoods(const Matrix& X, const Matrix& Y, int H, double sigma, long n_samples,
                                       std::uint64_t seed, LikelihoodRoute route = LikelihoodRoute::Auto);

/// sum over columns of log N(y; 0, X X^T / X_dim + sigma^2 I)
double closed_form_infinite_evidence(const Matrix& X, const Matrix& Y, double sigma);

struct PredictiveEstimate {
  double log_prob = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  bool degenerate_weights = false;  // effective sample size below 10
};

PredictiveEstimate mc_predictive_logprob(const ToyDataset& train, const Matrix& X_test, const Matrix& Y_test, int H,
                                         double sigma, long n_samples, std::uint64_t seed);

/// Self-normalized estimate from per-sample train and joint log likelihoods
/// computed with the same weight draws.
PredictiveEstimate predictive_from_loglik(const std::vector<double>& train, const std::vector<double>& joint);

/// log mean exp with a delta-method standard error.
void log_mean_exp(const std::vector<double>& v, double& value, double& std_error);

}  // namespace kernelflow
