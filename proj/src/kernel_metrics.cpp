#include "kernelflow/kernel_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "kernelflow/errors.hpp"

namespace kernelflow {

double kernel_correlation(const KernelMatrix& Ka, const KernelMatrix& Kb, bool* degenerate) {
  if (Ka.size() != Kb.size()) throw InvalidInput("kernel_correlation: size mismatch");
  const Index P = Ka.size();
  if (P < 3) throw InvalidInput("kernel_correlation: need P >= 3");
  const Index n = P * (P - 1) / 2;
  Vector a(n), b(n);
  Index t = 0;
  for (Index i = 0; i < P; ++i)
    for (Index j = i + 1; j < P; ++j, ++t) {
      a(t) = Ka(i, j);
      b(t) = Kb(i, j);
    }
  a.array() -= a.mean();
  b.array() -= b.mean();
  const double na = a.norm(), nb = b.norm();
  if (degenerate) *degenerate = false;
  if (na == 0.0 || nb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double subspace_variance_fraction(const KernelMatrix& K, const Matrix& Y) {
  if (Y.rows() != K.size()) throw InvalidInput("subspace_variance_fraction: label rows must match kernel size");
  const double tr = K.trace();
  if (!(tr > 0.0)) throw InvalidInput("subspace_variance_fraction: kernel trace must be positive");
  Eigen::ColPivHouseholderQR<Matrix> qr(Y);
  const Index r = qr.rank();
  Matrix Q = Matrix(qr.householderQ()).leftCols(r);
  double frac = (Q.transpose() * K.entries() * Q).trace() / tr;
  return std::clamp(frac, 0.0, 1.0);
}

SlopeFit spectrum_slope(const Vector& eig, int drop_count) {
  if (drop_count < 0) throw InvalidInput("spectrum_slope: drop_count must be >= 0");
  SlopeFit out;
  std::vector<double> xs, ys;
  for (Index k = drop_count; k < eig.size(); ++k) {
    if (!(eig(k) > 0.0)) {
      out.excluded_nonpositive = true;
      continue;
    }
    xs.push_back(std::log(static_cast<double>(k + 1)));
    ys.push_back(std::log(eig(k)));
  }
  if (xs.size() < 4) throw InvalidInput("spectrum_slope: need at least 4 positive eigenvalues");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.points = static_cast<int>(xs.size());
  return out;
}

GpScore gp_score(const KernelMatrix& K, const Matrix& Y, const FitOptions& opt) {
  const Index P = K.size();
  if (Y.rows() != P) throw InvalidInput("gp_score: label rows must match kernel size");
  SumKernelModel m;
  m.components = {K, KernelMatrix::trusted(Matrix::Identity(P, P))};
  // start each component at an equal share of the empirical output scale
  double yscale = Y.squaredNorm() / static_cast<double>(std::max<Index>(1, Y.size()));
  if (!(yscale > 0.0)) yscale = 1.0;
  m.weights = Vector(2);
  m.weights(0) = yscale / K.scale() / 2.0;
  m.weights(1) = yscale / 2.0;
  GpScore out;
  out.fit = natural_gradient_fit(m, Y, opt);
  out.score = out.fit.log_marginal;
  out.degenerate = out.fit.at_floor && Y.squaredNorm() == 0.0;
  return out;
}

Matrix one_hot(const std::vector<int>& labels) {
  std::map<int, Index> cls;
  for (int l : labels) cls.emplace(l, 0);
  Index c = 0;
  for (auto& kv : cls) kv.second = c++;
  Matrix Y = Matrix::Zero(static_cast<Index>(labels.size()), c);
  for (std::size_t i = 0; i < labels.size(); ++i) Y(static_cast<Index>(i), cls[labels[i]]) = 1.0;
  return Y;
}

std::vector<int> read_label_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open label file " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,class", 0) != 0)
    throw InvalidInput(path + ": expected header \"index,class\"");
  std::map<long, int> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    long idx;
    int cls;
    char comma;
    if (!(ss >> idx >> comma >> cls) || comma != ',' || idx < 0)
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": malformed row");
    if (!rows.emplace(idx, cls).second)
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": duplicate index");
  }
  std::vector<int> labels;
  long expect = 0;
  for (const auto& [idx, cls] : rows) {
    if (idx != expect++) throw InvalidInput(path + ": indices must be 0..P-1");
    labels.push_back(cls);
  }
  return labels;
}

MetricReport metric_report(const KernelMatrix& K, const KernelMatrix& reference, const Matrix& Y, int drop_count) {
  MetricReport r;
  r.correlation = kernel_correlation(reference, K);
  r.subspace_fraction = subspace_variance_fraction(K, Y);
  r.spectrum_slope = spectrum_slope(eigen_spectrum(K).eigenvalues, drop_count).slope;
  r.gp_score = gp_score(K, Y).score;
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"correlation", r.correlation},
          {"subspace_fraction", r.subspace_fraction},
          {"spectrum_slope", r.spectrum_slope},
          {"gp_score", r.gp_score}};
}

}  // namespace kernelflow
