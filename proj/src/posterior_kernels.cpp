#include "kernelflow/posterior_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernelflow/errors.hpp"

namespace kernelflow {
namespace {

KernelMatrix jitter_if_singular(const KernelMatrix& K, double& jitter) {
  jitter = 0.0;
  Eigen::LLT<Matrix> llt(K.entries());
  if (llt.info() == Eigen::Success && Matrix(llt.matrixL()).diagonal().minCoeff() > 0.0) return K;
  jitter = 1e-8 * K.scale();
  return KernelMatrix::trusted(K.entries() + jitter * Matrix::Identity(K.size(), K.size()));
}

Matrix spd_inverse(const Matrix& K) {
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) throw SingularKernel("kernel on the path is not positive definite");
  return llt.solve(Matrix::Identity(K.rows(), K.cols()));
}

double logdet_spd(const Matrix& K) {
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) throw SingularKernel("kernel on the path is not positive definite");
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace

void WidthProfile::check() const {
  if (widths.empty()) throw InvalidInput("width profile is empty");
  for (double w : widths)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("widths must be positive");
}

double WidthProfile::geo_upto(int l) const {
  if (l <= 0) return 1.0;
  double s = 0.0;
  for (int i = 0; i < l; ++i) s += std::log(widths[static_cast<std::size_t>(i)]);
  return std::exp(s / l);
}

double WidthProfile::geo_after(int l) const {
  const int n = static_cast<int>(widths.size());
  if (l >= n) return 1.0;
  double s = 0.0;
  for (int i = l; i < n; ++i) s += std::log(widths[static_cast<std::size_t>(i)]);
  return std::exp(s / (n - l));
}

WidthProfile WidthProfile::uniform(double N, double Y, int L) {
  WidthProfile p;
  p.widths.assign(static_cast<std::size_t>(L), N);
  p.widths.push_back(Y);
  return p;
}

KernelPath map_kernel_path(const KernelMatrix& K0_in, const KernelMatrix& K_out_in, const WidthProfile& profile) {
  profile.check();
  if (K0_in.size() != K_out_in.size()) throw InvalidInput("map_kernel_path: endpoint sizes differ");
  KernelPath path;
  path.method = PathMethod::MAP;
  KernelMatrix K0 = rescue_pd(K0_in, &path.diagnostics.k0_jitter);
  KernelMatrix Kout = jitter_if_singular(K_out_in, path.diagnostics.kout_jitter);
  const int L1 = profile.L() + 1;
  path.kernels.push_back(K0);
  for (int l = 1; l < L1; ++l) {
    const double a = static_cast<double>(l) / L1;
    const double c = std::pow(profile.geo_after(l) / profile.geo_upto(l), static_cast<double>(l) * (L1 - l) / L1);
    path.kernels.push_back(KernelMatrix::trusted(c * geodesic_power(K0, Kout, a).entries()));
  }
  path.kernels.push_back(Kout);
  path.diagnostics.residual = objective_and_residual(path, profile, PathMethod::MAP).residual;
  return path;
}

TRoot solve_t_ratio(double s, double ratio, int L) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidInput("solve_t_ratio: s must be finite and >= 0");
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw InvalidInput("solve_t_ratio: ratio must be positive");
  if (L < 0) throw InvalidInput("solve_t_ratio: L must be >= 0");
  TRoot r;
  const double lo0 = std::max(-1.0, -1.0 / ratio);  // u = t - 1 lower boundary
  if (s == 0.0) {
    r.u = lo0;
    r.t = 1.0 + lo0;
    r.degenerate = true;
    return r;
  }
  const double logs = std::log(s);
  // h is strictly increasing on (lo0, inf)
  auto h = [&](double u) { return std::log1p(ratio * u) + L * std::log1p(u) - logs; };
  auto dh = [&](double u) { return ratio / (1.0 + ratio * u) + L / (1.0 + u); };
  double lo = lo0, hi = std::max(s, 1.0);
  while (h(hi) <= 0.0) hi *= 2.0;
  double u = std::expm1(logs / (L + 1));
  if (!(u > lo && u < hi)) u = 0.5 * (lo + hi);
  for (r.iterations = 1; r.iterations <= 200; ++r.iterations) {
    const double hv = h(u);
    if (hv == 0.0) break;
    (hv < 0.0 ? lo : hi) = u;
    double next = u - hv / dh(u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == u || std::abs(next - u) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(u)) {
      u = next;
      break;
    }
    u = next;
  }
  r.u = u;
  r.t = 1.0 + u;
  r.residual = (1.0 + ratio * u) * std::exp(L * std::log1p(u)) - s;
  return r;
}

KernelPath langevin_kernel_path(const KernelMatrix& K0_in, const KernelMatrix& K_out_in, double N, double Y, int L) {
  if (!(N > 0.0) || !(Y > 0.0)) throw InvalidInput("langevin_kernel_path: N and Y must be positive");
  if (L < 0) throw InvalidInput("langevin_kernel_path: L must be >= 0");
  if (K0_in.size() != K_out_in.size()) throw InvalidInput("langevin_kernel_path: endpoint sizes differ");
  KernelPath path;
  path.method = PathMethod::Langevin;
  KernelMatrix K0 = rescue_pd(K0_in, &path.diagnostics.k0_jitter);
  KernelMatrix Kout = jitter_if_singular(K_out_in, path.diagnostics.kout_jitter);
  Eigen::SelfAdjointEigenSolver<Matrix> e0(K0.entries());
  const Matrix& Q0 = e0.eigenvectors();
  Vector l0 = e0.eigenvalues();
  if (l0.minCoeff() <= 0.0) throw SingularKernel("langevin_kernel_path: K0 not positive definite");
  Matrix half = Q0 * l0.cwiseSqrt().asDiagonal() * Q0.transpose();
  Matrix ihalf = Q0 * l0.cwiseSqrt().cwiseInverse().asDiagonal() * Q0.transpose();
  Matrix M = ihalf * Kout.entries() * ihalf;
  Eigen::SelfAdjointEigenSolver<Matrix> em(0.5 * (M + M.transpose()));
  const Matrix& Q = em.eigenvectors();
  const Vector svals = em.eigenvalues().cwiseMax(0.0);
  const double ratio = N / Y;
  path.t = Vector(svals.size());
  Vector u(svals.size());
  for (Index i = 0; i < svals.size(); ++i) {
    TRoot root = solve_t_ratio(svals(i), ratio, L);
    path.t(i) = root.t;
    u(i) = root.u;
    path.diagnostics.max_t_iterations = std::max(path.diagnostics.max_t_iterations, root.iterations);
    if (root.degenerate) ++path.diagnostics.degenerate_eigenvalues;
  }
  Matrix B = half * Q;
  path.kernels.push_back(K0);
  for (int l = 1; l <= L; ++l) {
    Vector d(u.size());
    for (Index i = 0; i < u.size(); ++i) d(i) = std::exp(l * std::log1p(u(i)));
    path.kernels.push_back(KernelMatrix::trusted(B * d.asDiagonal() * B.transpose()));
  }
  path.kernels.push_back(Kout);
  path.diagnostics.residual =
      objective_and_residual(path, WidthProfile::uniform(N, Y, L), PathMethod::Langevin).residual;
  return path;
}

ObjectiveResidual objective_and_residual(const KernelPath& path, const WidthProfile& profile, PathMethod method,
                                         bool has_output_term) {
  profile.check();
  const int n = static_cast<int>(path.kernels.size()) - 1;  // transitions
  if (n < 1) throw InvalidInput("objective_and_residual: path needs at least two kernels");
  if (static_cast<int>(profile.widths.size()) != n)
    throw InvalidInput("objective_and_residual: need one width per transition");
  std::vector<Matrix> inv(static_cast<std::size_t>(n + 1));
  for (int l = 0; l <= n; ++l) inv[static_cast<std::size_t>(l)] = spd_inverse(path.kernels[static_cast<std::size_t>(l)].entries());
  auto K = [&](int l) -> const Matrix& { return path.kernels[static_cast<std::size_t>(l)].entries(); };
  auto Ki = [&](int l) -> const Matrix& { return inv[static_cast<std::size_t>(l)]; };
  auto N = [&](int l) { return profile.widths[static_cast<std::size_t>(l - 1)]; };
  ObjectiveResidual out;
  for (int l = 1; l <= n; ++l) {
    const double tr = (Ki(l - 1) * K(l)).trace();
    if (method == PathMethod::MAP) {
      out.objective += -0.5 * N(l) * tr;
    } else {
      const double ld = logdet_spd(K(l)) - logdet_spd(K(l - 1));
      out.objective += 0.5 * N(l) * (ld - tr);
    }
  }
  const int last_free = has_output_term ? n - 1 : n;
  for (int l = 1; l <= last_free; ++l) {
    Matrix G;
    if (method == PathMethod::MAP) {
      G = -0.5 * N(l) * Ki(l - 1);
      if (l < n) G += 0.5 * N(l + 1) * Ki(l) * K(l + 1) * Ki(l);
    } else {
      G = 0.5 * N(l) * (Ki(l) - Ki(l - 1));
      if (l < n) G += 0.5 * N(l + 1) * (Ki(l) * K(l + 1) * Ki(l) - Ki(l));
    }
    out.residual = std::max(out.residual, G.cwiseAbs().maxCoeff());
  }
  return out;
}

WishartModeCheck wishart_mode_correction_check(const KernelMatrix& J, double N) {
  const Index P = J.size();
  if (!(N > 0.0)) throw InvalidInput("wishart check: N must be positive");
  WishartModeCheck out;
  out.degenerate = N <= static_cast<double>(P) + 1.0;
  out.uncorrected_mode = out.degenerate ? Matrix::Zero(P, P) : Matrix(((N - P - 1) / N) * J.entries());
  const Matrix Jinv = spd_inverse(rescue_pd(J).entries());
  // K = C C^T, C lower triangular with log-parameterized diagonal
  auto objective = [&](const Matrix& C) {
    Matrix Kc = C * C.transpose();
    return 0.5 * N * (2.0 * C.diagonal().array().abs().log().sum()) - 0.5 * N * (Jinv * Kc).trace();
  };
  Matrix C = Matrix::Identity(P, P) * std::sqrt(J.scale());
  double f = objective(C);
  double step = 1.0;
  for (out.iterations = 0; out.iterations < 100000; ++out.iterations) {
    Matrix Kc = C * C.transpose();
    Matrix G = 0.5 * N * (spd_inverse(Kc) - Jinv);
    Matrix dC = (2.0 * G * C).triangularView<Eigen::Lower>();
    for (Index i = 0; i < P; ++i) dC(i, i) *= C(i, i);  // chain rule through log of the diagonal
    out.gradient_norm = dC.norm();
    if (out.gradient_norm <= 1e-12 * N) break;
    step = std::min(1.0, step * 2.0);
    bool moved = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      Matrix Ct = C;
      for (Index i = 0; i < P; ++i)
        for (Index j = 0; j < i; ++j) Ct(i, j) += step * dC(i, j);
      for (Index i = 0; i < P; ++i) Ct(i, i) *= std::exp(step * dC(i, i));
      double ft = objective(Ct);
      if (ft >= f + 1e-4 * step * out.gradient_norm * out.gradient_norm) {
        C = Ct;
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.corrected_argmax = C * C.transpose();
  return out;
}

ReparamSample sample_reparam(const KernelMatrix& J, int N, Rng& rng) {
  if (N < 1) throw InvalidInput("sample_reparam: N must be >= 1");
  CholeskyFactor f = factorize(J);
  std::normal_distribution<double> gauss;
  ReparamSample s;
  s.V = Matrix(J.size(), N);
  for (Index c = 0; c < s.V.cols(); ++c)
    for (Index r = 0; r < s.V.rows(); ++r) s.V(r, c) = gauss(rng);
  s.R = s.V * s.V.transpose() / N;
  s.K = f.U.transpose() * s.R * f.U;
  return s;
}

namespace {

// A = L L^T, L lower; returns the symmetric gradient w.r.t. A given Lbar.
Matrix cholesky_backward(const Matrix& Lc, const Matrix& Lbar) {
  Matrix Pm = Lc.transpose() * Lbar;
  Matrix Phi = Pm.triangularView<Eigen::Lower>();
  Phi.diagonal() *= 0.5;
  Matrix Linv = Lc.triangularView<Eigen::Lower>().solve(Matrix::Identity(Lc.rows(), Lc.cols()));
  Matrix S = Linv.transpose() * Phi * Linv;
  return 0.5 * (S + S.transpose());
}

}  // namespace

std::vector<Matrix> langevin_gradient(const KernelMatrix& K0, const Matrix* YYt, double Y, const std::vector<Matrix>& V,
                                      double* log_joint) {
  const std::size_t L = V.size();
  std::vector<Matrix> Lc(L), R(L), K(L + 1);
  K[0] = K0.entries();
  double lj = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::LLT<Matrix> llt(K[l]);
    if (llt.info() != Eigen::Success) throw SingularKernel("langevin: kernel lost positive definiteness");
    Lc[l] = llt.matrixL();
    if (!Lc[l].allFinite() || Lc[l].diagonal().minCoeff() <= 0.0)
      throw SingularKernel("langevin: kernel lost positive definiteness");
    const double n = static_cast<double>(V[l].cols());
    R[l] = V[l] * V[l].transpose() / n;
    K[l + 1] = Lc[l] * R[l] * Lc[l].transpose();
    lj += -0.5 * V[l].squaredNorm();
  }
  Matrix Kbar = Matrix::Zero(K0.size(), K0.size());
  if (YYt) {
    Eigen::LLT<Matrix> llt(K[L]);
    if (llt.info() != Eigen::Success) throw SingularKernel("langevin: top kernel lost positive definiteness");
    Matrix Lt = llt.matrixL();
    if (!Lt.allFinite() || Lt.diagonal().minCoeff() <= 0.0)
      throw SingularKernel("langevin: top kernel lost positive definiteness");
    Matrix Kinv = llt.solve(Matrix::Identity(K0.size(), K0.size()));
    lj += -0.5 * (Kinv * *YYt).trace() - Y * Lt.diagonal().array().log().sum();
    Kbar = 0.5 * Kinv * *YYt * Kinv - 0.5 * Y * Kinv;
  }
  if (log_joint) *log_joint = lj;
  std::vector<Matrix> grad(L);
  for (std::size_t l = L; l-- > 0;) {
    const double n = static_cast<double>(V[l].cols());
    // K_{l+1} = Lc R Lc^T with Lc = chol(K_l)
    Matrix Rbar = Lc[l].transpose() * Kbar * Lc[l];
    grad[l] = (2.0 / n) * Rbar * V[l] - V[l];
    if (l > 0) {
      Matrix Lbar = 2.0 * Kbar * Lc[l] * R[l];
      Lbar = Lbar.triangularView<Eigen::Lower>();
      Kbar = cholesky_backward(Lc[l], Lbar);
    }
  }
  return grad;
}

LangevinResult langevin_simulate(const KernelMatrix& K0, const std::optional<KernelMatrix>& K_out, int N, int Y,
                                 int L, const LangevinOptions& opt) {
  if (N < 1 || L < 1) throw InvalidInput("langevin_simulate: need N >= 1 and L >= 1");
  if (K_out && Y < 1) throw InvalidInput("langevin_simulate: Y must be >= 1 with data");
  if (opt.n_steps < 1) throw InvalidInput("langevin_simulate: n_steps must be >= 1");
  if (opt.burn_in < 0 || !(opt.dt > 0.0)) throw InvalidInput("langevin_simulate: bad dt or burn_in");
  if (K_out && K_out->size() != K0.size()) throw InvalidInput("langevin_simulate: endpoint sizes differ");
  const Index P = K0.size();
  const int batches = std::max(2, opt.batches);
  if (opt.n_steps < batches) throw InvalidInput("langevin_simulate: n_steps must cover the batches");
  Rng rng(seed_stream(opt.seed, {"langevin"}));
  std::normal_distribution<double> gauss;
  std::vector<Matrix> V;
  if (!opt.initial_V.empty()) {
    if (opt.initial_V.size() != static_cast<std::size_t>(L))
      throw InvalidInput("langevin_simulate: one initial V per hidden layer required");
    V = opt.initial_V;
    for (const auto& v : V) {
      if (v.rows() != P || v.cols() != N) throw InvalidInput("langevin_simulate: initial V has wrong shape");
      Eigen::LLT<Matrix> llt(v * v.transpose());
      if (llt.info() != Eigen::Success || Matrix(llt.matrixL()).diagonal().minCoeff() <= 0.0)
        throw InvalidInput("langevin_simulate: initial V V^T must be positive definite");
    }
  } else {
    V.assign(static_cast<std::size_t>(L), Matrix(P, N));
    for (auto& v : V)
      for (Index c = 0; c < N; ++c)
        for (Index r = 0; r < P; ++r) v(r, c) = gauss(rng);
  }
  Matrix YYt;
  if (K_out) YYt = static_cast<double>(Y) * K_out->entries();
  const Matrix* yy = K_out ? &YYt : nullptr;

  LangevinResult res;
  res.mean_R.assign(static_cast<std::size_t>(L), Matrix::Zero(P, P));
  res.mean_K = res.mean_R;
  std::vector<std::vector<Matrix>> bR(static_cast<std::size_t>(batches), res.mean_R), bK = bR;
  const long per_batch = opt.n_steps / batches;
  const long kept = per_batch * batches;

  std::vector<Matrix> noise(static_cast<std::size_t>(L), Matrix(P, N));
  auto grad = langevin_gradient(K0, yy, Y, V);
  const long total = opt.burn_in + kept;
  for (long step = 0; step < total; ++step) {
    for (auto& z : noise)
      for (Index c = 0; c < N; ++c)
        for (Index r = 0; r < P; ++r) z(r, c) = gauss(rng);
    double dt = opt.dt;
    int halvings = 0;
    for (;;) {
      std::vector<Matrix> trial(V.size());
      for (std::size_t l = 0; l < V.size(); ++l) trial[l] = V[l] + 0.5 * dt * grad[l] + std::sqrt(dt) * noise[l];
      try {
        auto g = langevin_gradient(K0, yy, Y, trial);
        bool finite = true;
        for (const auto& m : g) finite = finite && m.allFinite();
        if (!finite) throw SingularKernel("non-finite gradient");
        V = std::move(trial);
        grad = std::move(g);
        break;
      } catch (const SingularKernel&) {
        if (++halvings > 10) throw InstabilityError("langevin_simulate: step failed after 10 halvings of dt");
        dt *= 0.5;
        ++res.halvings;
      }
    }
    if (step < opt.burn_in) continue;
    const std::size_t b = static_cast<std::size_t>((step - opt.burn_in) / per_batch);
    Matrix Kprev = K0.entries();
    for (std::size_t l = 0; l < V.size(); ++l) {
      Matrix R = V[l] * V[l].transpose() / N;
      Eigen::LLT<Matrix> llt(Kprev);
      Matrix Lc = llt.matrixL();
      Matrix Kl = Lc * R * Lc.transpose();
      bR[b][l] += R;
      bK[b][l] += Kl;
      Kprev = Kl;
    }
  }
  res.se_R.assign(static_cast<std::size_t>(L), Matrix::Zero(P, P));
  res.se_K = res.se_R;
  for (std::size_t l = 0; l < static_cast<std::size_t>(L); ++l) {
    for (int b = 0; b < batches; ++b) {
      bR[static_cast<std::size_t>(b)][l] /= static_cast<double>(per_batch);
      bK[static_cast<std::size_t>(b)][l] /= static_cast<double>(per_batch);
      res.mean_R[l] += bR[static_cast<std::size_t>(b)][l] / batches;
      res.mean_K[l] += bK[static_cast<std::size_t>(b)][l] / batches;
    }
    for (int b = 0; b < batches; ++b) {
      res.se_R[l] += (bR[static_cast<std::size_t>(b)][l] - res.mean_R[l]).cwiseAbs2();
      res.se_K[l] += (bK[static_cast<std::size_t>(b)][l] - res.mean_K[l]).cwiseAbs2();
    }
    res.se_R[l] = (res.se_R[l] / (static_cast<double>(batches) * (batches - 1))).cwiseSqrt();
    res.se_K[l] = (res.se_K[l] / (static_cast<double>(batches) * (batches - 1))).cwiseSqrt();
  }
  return res;
}

nlohmann::json path_to_json(const KernelPath& path) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < path.kernels.size(); ++l) {
    const auto& K = path.kernels[l];
    nlohmann::json entries = nlohmann::json::array();
    for (Index i = 0; i < K.size(); ++i)
      for (Index j = 0; j < K.size(); ++j) entries.push_back(K(i, j));
    layers.push_back({{"layer", l}, {"size", K.size()}, {"entries", entries}});
  }
  const auto& d = path.diagnostics;
  return {{"method", path.method == PathMethod::MAP ? "map" : "langevin"},
          {"kernels", layers},
          {"diagnostics",
           {{"stationarity_residual", d.residual},
            {"k0_jitter", d.k0_jitter},
            {"kout_jitter", d.kout_jitter},
            {"max_t_iterations", d.max_t_iterations},
            {"degenerate_eigenvalues", d.degenerate_eigenvalues}}}};
}

}  // namespace kernelflow
