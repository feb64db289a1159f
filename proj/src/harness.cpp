#include "kernelflow/harness.hpp"

#include <openssl/sha.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "kernelflow/errors.hpp"
#include "kernelflow/gp_sumkernel.hpp"
#include "kernelflow/kernel_io.hpp"
#include "kernelflow/kernel_metrics.hpp"
#include "kernelflow/posterior_kernels.hpp"
#include "kernelflow/prior_flexibility.hpp"
#include "kernelflow/seed_stream.hpp"
#include "kernelflow/toy_evidence.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kernelflow {
namespace {

// Typed access to one JSON object; every key must be consumed before finish().
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  const json& raw(const std::string& k) {
    used_.insert(k);
    if (!j_.contains(k)) throw ConfigError(at(k), "required");
    return j_.at(k);
  }

  template <class T>
  T req(const std::string& k) {
    return convert<T>(raw(k), at(k));
  }

  template <class T>
  T get(const std::string& k, T def) {
    used_.insert(k);
    if (!j_.contains(k)) return def;
    return convert<T>(j_.at(k), at(k));
  }

  Fields sub(const std::string& k) { return Fields(raw(k), at(k)); }

  std::string at(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  template <class T>
  static T convert(const json& v, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(where, "expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(where, "expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(where, "expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(where, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& ex) {
      throw ConfigError(where, std::string("wrong type: ") + ex.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class T>
std::vector<T> list_of(Fields& f, const std::string& k, std::vector<T> def) {
  if (!f.has(k)) {
    f.get<json>(k, json());
    return def;
  }
  const json& v = f.raw(k);
  if (!v.is_array() || v.empty()) throw ConfigError(f.at(k), "expected a non-empty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string where = f.at(k) + "[" + std::to_string(i) + "]";
    const json& e = v[i];
    if constexpr (std::is_same_v<T, std::string>) {
      if (!e.is_string()) throw ConfigError(where, "expected a string");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!e.is_boolean()) throw ConfigError(where, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer() && !e.is_number_unsigned()) throw ConfigError(where, "expected an integer");
    } else {
      if (!e.is_number()) throw ConfigError(where, "expected a number");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

void positive(const std::string& where, double v) {
  if (!(v > 0.0)) throw ConfigError(where, "must be positive");
}

std::string resolve(const std::string& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base) / path).string();
}

KernelMatrix kernel_ref(const json& v, const std::string& where, const std::string& base) {
  try {
    if (v.is_string()) return read_kernel_file(resolve(base, v.get<std::string>()));
    if (v.is_object()) return kernel_from_json(v);
  } catch (const InvalidInput& ex) {
    throw ConfigError(where, ex.what());
  }
  throw ConfigError(where, "expected a kernel file path or an inline {size, entries} object");
}

Matrix matrix_ref(const json& v, const std::string& where, const std::string& base) {
  json j = v;
  if (v.is_string()) {
    std::ifstream in(resolve(base, v.get<std::string>()));
    if (!in) throw ConfigError(where, "cannot open " + v.get<std::string>());
    try {
      in >> j;
    } catch (const json::exception& ex) {
      throw ConfigError(where, ex.what());
    }
  }
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries"))
    throw ConfigError(where, "expected {rows, cols, entries}");
  const long r = j.at("rows").get<long>(), c = j.at("cols").get<long>();
  const json& e = j.at("entries");
  if (r < 1 || c < 1 || !e.is_array() || static_cast<long>(e.size()) != r * c)
    throw ConfigError(where, "entries must hold rows*cols numbers");
  Matrix M(r, c);
  for (long i = 0; i < r; ++i)
    for (long k = 0; k < c; ++k) M(i, k) = e[static_cast<std::size_t>(i * c + k)].get<double>();
  return M;
}

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    fs::path p = dir_ / name;
    written_.push_back(p);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
    if (!out) throw Error("write failed for " + p.string());
    out.close();
    entries_.push_back({name, sha256_hex(content), content.size()});
  }

  void rollback() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

  std::vector<ManifestEntry> entries() const { return entries_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  std::vector<ManifestEntry> entries_;
};

std::uint64_t need_seed(const std::optional<std::uint64_t>& seed, const std::string& why) {
  if (!seed) throw ConfigError("seed", "required for " + why);
  return *seed;
}

void run_toy(Fields& p, const std::optional<std::uint64_t>& seed, Writer& w) {
  const int P = p.get<int>("P", 20), X_dim = p.get<int>("X_dim", 4), Y_dim = p.get<int>("Y_dim", 10);
  const double sigma = p.get<double>("sigma", 0.1);
  const long n_samples = p.get<long>("n_samples", 64000);
  const auto H_grid = list_of<int>(p, "H_grid", {1, 2, 4, 8, 16, 32, 64, 128, 256, 512});
  const auto H_gen = list_of<int>(p, "H_gen", {1, 2, 4});
  const std::string mod_name = p.get<std::string>("modifier", "none");
  const double factor = p.get<double>("scale_factor", 100.0);
  const int n_seeds = p.get<int>("n_seeds", 10);
  const int test_size = p.get<int>("test_size", 100);
  const bool predictive = p.get<bool>("predictive", true);
  p.finish();
  if (P < 1 || X_dim < 1 || Y_dim < 1) throw ConfigError("parameters", "P, X_dim and Y_dim must be >= 1");
  positive(p.at("sigma"), sigma);
  if (n_samples < 2) throw ConfigError(p.at("n_samples"), "must be >= 2");
  if (n_seeds < 1) throw ConfigError(p.at("n_seeds"), "must be >= 1");
  if (test_size < 0) throw ConfigError(p.at("test_size"), "must be >= 0");
  for (int h : H_grid)
    if (h < 1) throw ConfigError(p.at("H_grid"), "entries must be >= 1");
  for (int h : H_gen)
    if (h < 1) throw ConfigError(p.at("H_gen"), "entries must be >= 1");
  Modifier mod;
  if (mod_name == "scale_inputs")
    mod = Modifier::scale_inputs(factor);
  else if (mod_name == "zero_all_but_first")
    mod = Modifier::zero_all_but_first();
  else if (mod_name != "none")
    throw ConfigError(p.at("modifier"), "expected none, scale_inputs or zero_all_but_first");
  const std::uint64_t root = need_seed(seed, "toy-evidence");

  std::string csv = "H,log_evidence,std_error,pred_logprob,seed\n";
  std::string meta = "seed,H_gen,modifier\n";
  for (std::size_t a = 0; a < H_gen.size(); ++a)
    for (int b = 0; b < n_seeds; ++b) {
      const std::uint64_t child = seed_stream(root, {"toy-dataset", static_cast<std::uint64_t>(a),
                                                     static_cast<std::uint64_t>(b)});
      ToyDataset d = generate_toy_dataset(child, P, X_dim, Y_dim, H_gen[a], sigma, mod, predictive ? test_size : 0);
      meta += std::to_string(child) + "," + std::to_string(H_gen[a]) + "," + mod.name() + "\n";
      const std::uint64_t mc = seed_stream(child, {"mc-root"});
      Matrix Xa, Ya;
      if (predictive && test_size > 0) {
        Xa.resize(d.X.rows() + d.X_test.rows(), d.X.cols());
        Xa << d.X, d.X_test;
        Ya.resize(d.Y.rows() + d.Y_test.rows(), d.Y.cols());
        Ya << d.Y, d.Y_test;
      }
      for (int H : H_grid) {
        auto lt = mc_log_likelihoods(d.X, d.Y, H, sigma, n_samples, mc);
        double ev, se;
        log_mean_exp(lt, ev, se);
        double pred = std::numeric_limits<double>::quiet_NaN();
        if (Xa.size()) pred = predictive_from_loglik(lt, mc_log_likelihoods(Xa, Ya, H, sigma, n_samples, mc)).log_prob;
        csv += std::to_string(H) + "," + fmt17(ev) + "," + fmt17(se) + "," + fmt17(pred) + "," +
               std::to_string(child) + "\n";
      }
    }
  w.write("evidence.csv", csv);
  w.write("datasets.csv", meta);
}

NetKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "FC") return NetKind::FC;
  if (s == "CNN") return NetKind::CNN;
  if (s == "LCN") return NetKind::LCN;
  throw ConfigError(where, "expected FC, CNN or LCN");
}

void run_prior(Fields& p, const std::optional<std::uint64_t>& seed, Writer& w) {
  const auto kinds = list_of<std::string>(p, "kinds", {"FC"});
  const auto structured = list_of<bool>(p, "structured", {true});
  const auto Ss = list_of<int>(p, "S", {32});
  const auto Ns = list_of<int>(p, "N", {64});
  const auto depths = list_of<int>(p, "depth", {1});
  const long n_networks = p.get<long>("n_networks", 10000);
  const auto disp = list_of<int>(p, "displacements", {-1, 0, 1});
  const int M0 = p.get<int>("input_channels", 100);
  const std::string readout = p.get<std::string>("readout", "spatial_mean");
  const std::string analytic = p.get<std::string>("analytic", "approximate");
  const bool mc = p.get<bool>("mc", true);
  const std::string input_kind = p.get<std::string>("input", mc ? "realized" : "ideal");
  p.finish();
  if (readout != "spatial_mean" && readout != "full_image_patch")
    throw ConfigError(p.at("readout"), "expected spatial_mean or full_image_patch");
  if (analytic != "exact" && analytic != "approximate")
    throw ConfigError(p.at("analytic"), "expected exact or approximate");
  if (input_kind != "realized" && input_kind != "ideal") throw ConfigError(p.at("input"), "expected realized or ideal");
  if (mc && n_networks < 2) throw ConfigError(p.at("n_networks"), "must be >= 2");
  for (int v : Ss)
    if (v < 1) throw ConfigError(p.at("S"), "entries must be >= 1");
  for (int v : Ns)
    if (v < 1) throw ConfigError(p.at("N"), "entries must be >= 1");
  for (int v : depths)
    if (v < 1) throw ConfigError(p.at("depth"), "entries must be >= 1");
  std::vector<NetKind> ks;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    ks.push_back(parse_kind(kinds[i], p.at("kinds") + "[" + std::to_string(i) + "]"));
  const bool realized = input_kind == "realized";
  std::uint64_t root = 0;
  if (mc || realized) root = need_seed(seed, "sampled networks or realized inputs");
  const CovMode mode = analytic == "exact" ? CovMode::Exact : CovMode::Approximate;

  std::string csv = "kind,structured,S,N,depth,analytic_var,mc_var,mc_se\n";
  std::uint64_t row = 0;
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    const bool fc = ks[ki] == NetKind::FC;
    const std::vector<bool> st = fc ? std::vector<bool>{false} : structured;
    const std::vector<int> sl = fc ? std::vector<int>{1} : Ss;
    for (bool s_flag : st)
      for (int S : sl) {
        Matrix raw;
        Matrix mean0;
        if (fc) {
          raw = Matrix::Ones(1, M0);
          mean0 = Matrix::Ones(1, 1);
        } else {
          InputState in = make_input_state(s_flag, S, M0, seed_stream(root, {"input", static_cast<std::uint64_t>(S)}));
          raw = in.raw;
          mean0 = realized ? in.realized().mean_kernel : in.ideal.mean_kernel;
        }
        for (int N : Ns)
          for (int depth : depths) {
            ArchitectureSpec spec = ArchitectureSpec::uniform(ks[ki], depth, N, S);
            spec.displacements = disp;
            spec.input_channels = M0;
            spec.readout = readout == "spatial_mean" ? Readout::SpatialMean : Readout::FullImagePatch;
            double av;
            if (fc) {
              av = fc_cov_recursion(KernelMatrix::trusted(mean0), spec.widths, mode)(0, 0, 0, 0);
            } else if (mode == CovMode::Exact) {
              av = spatial_cov_recursion_exact(mean0, spec).final_variance;
            } else {
              av = spatial_cov_recursion({mean0, Matrix::Zero(S, S)}, spec).final_variance;
            }
            double mv = std::numeric_limits<double>::quiet_NaN(), ms = mv;
            if (mc) {
              auto stats = sample_finite_network_kernels(spec, raw, n_networks, seed_stream(root, {"prior-variance", row}));
              mv = stats.top_var(0, 0);
              ms = stats.top_var_se(0, 0);
            }
            ++row;
            csv += kinds[ki] + "," + (s_flag ? "true" : "false") + "," + std::to_string(S) + "," + std::to_string(N) +
                   "," + std::to_string(depth) + "," + fmt17(av) + "," + fmt17(mv) + "," + fmt17(ms) + "\n";
          }
      }
  }
  w.write("prior_variance.csv", csv);
}

std::vector<double> parse_width_list(const std::string& s, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(where, "bad width '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError(where, "no widths given");
  return out;
}

void run_posterior(Fields& p, const RunOverrides& ov, const std::string& base, Writer& w) {
  KernelMatrix K0, Kout;
  if (ov.k0) {
    if (p.has("k0")) p.raw("k0");
    K0 = kernel_ref(json(*ov.k0), "--k0", fs::current_path().string());
  } else {
    K0 = kernel_ref(p.raw("k0"), p.at("k0"), base);
  }
  if (ov.kout) {
    if (p.has("kout")) p.raw("kout");
    Kout = kernel_ref(json(*ov.kout), "--kout", fs::current_path().string());
  } else {
    Kout = kernel_ref(p.raw("kout"), p.at("kout"), base);
  }
  std::vector<double> widths;
  if (ov.widths) {
    if (p.has("widths")) p.raw("widths");
    widths = parse_width_list(*ov.widths, "--widths");
  } else {
    widths = list_of<double>(p, "widths", {});
    if (widths.empty()) throw ConfigError(p.at("widths"), "required");
  }
  std::string method = p.get<std::string>("method", "map");
  if (ov.method) method = *ov.method;
  p.finish();
  for (double v : widths) positive("widths", v);
  if (K0.size() != Kout.size()) throw ConfigError("parameters.kout", "size differs from k0");
  KernelPath path;
  WidthProfile prof{widths};
  if (method == "map") {
    path = map_kernel_path(K0, Kout, prof);
  } else if (method == "langevin") {
    for (std::size_t i = 1; i + 1 < widths.size(); ++i)
      if (widths[i] != widths[0]) throw ConfigError("parameters.widths", "langevin needs uniform hidden widths");
    const int L = static_cast<int>(widths.size()) - 1;
    path = langevin_kernel_path(K0, Kout, L > 0 ? widths[0] : widths.back(), widths.back(), L);
  } else {
    throw ConfigError("parameters.method", "expected map or langevin");
  }
  w.write("path.json", dump_json(path_to_json(path)) + "\n");
}

void run_sumkernel(Fields& p, const std::optional<std::uint64_t>& seed, const std::string& base, Writer& w) {
  SumKernelModel model;
  Matrix Y;
  FitOptions opt;
  opt.max_iters = p.get<int>("max_iters", opt.max_iters);
  opt.tol = p.get<double>("tol", opt.tol);
  opt.damping_rel = p.get<double>("damping", opt.damping_rel);
  if (p.has("synthetic")) {
    if (p.has("components") || p.has("targets"))
      throw ConfigError(p.at("synthetic"), "cannot be combined with components or targets");
    Fields s = p.sub("synthetic");
    const int P = s.get<int>("P", 50), N = s.get<int>("N", 200);
    const auto lam = list_of<double>(s, "lambda_true", {0.7, 0.3});
    s.finish();
    if (P < 1 || N < 1) throw ConfigError(p.at("synthetic"), "P and N must be >= 1");
    for (double v : lam) positive(s.at("lambda_true"), v);
    const std::uint64_t root = need_seed(seed, "synthetic sum-kernel data");
    Rng rng(seed_stream(root, {"sumkernel", "components"}));
    std::normal_distribution<double> g;
    Matrix Ktrue = Matrix::Zero(P, P);
    for (std::size_t i = 0; i < lam.size(); ++i) {
      Matrix F(P, 2 * P);
      for (Index c = 0; c < F.cols(); ++c)
        for (Index r = 0; r < P; ++r) F(r, c) = g(rng);
      model.components.push_back(gram_kernel(F, 2.0 * P));
      Ktrue += lam[i] * model.components.back().entries();
    }
    Rng ry(seed_stream(root, {"sumkernel", "targets"}));
    Matrix Z(P, N);
    for (Index c = 0; c < N; ++c)
      for (Index r = 0; r < P; ++r) Z(r, c) = g(ry);
    Y = Matrix(Ktrue.llt().matrixL()) * Z;
  } else {
    const json& comps = p.raw("components");
    if (!comps.is_array() || comps.empty()) throw ConfigError(p.at("components"), "expected a non-empty array");
    for (std::size_t i = 0; i < comps.size(); ++i)
      model.components.push_back(kernel_ref(comps[i], p.at("components") + "[" + std::to_string(i) + "]", base));
    Y = matrix_ref(p.raw("targets"), p.at("targets"), base);
  }
  std::vector<double> init;
  if (p.has("initial_lambda")) init = list_of<double>(p, "initial_lambda", {});
  p.finish();
  const Index P = model.components.front().size();
  for (std::size_t i = 0; i < model.components.size(); ++i)
    if (model.components[i].size() != P) throw ConfigError("parameters.components", "kernels differ in size");
  if (Y.rows() != P) throw ConfigError("parameters.targets", "row count must match kernel size");
  const Index m = static_cast<Index>(model.components.size());
  model.weights = Vector(m);
  if (!init.empty()) {
    if (static_cast<Index>(init.size()) != m) throw ConfigError("parameters.initial_lambda", "one value per component");
    for (Index i = 0; i < m; ++i) {
      positive("parameters.initial_lambda", init[static_cast<std::size_t>(i)]);
      model.weights(i) = init[static_cast<std::size_t>(i)];
    }
  } else {
    double yscale = Y.squaredNorm() / static_cast<double>(Y.size());
    if (!(yscale > 0.0)) yscale = 1.0;
    for (Index i = 0; i < m; ++i) model.weights(i) = yscale / model.components[static_cast<std::size_t>(i)].scale() / m;
  }
  FitResult r = natural_gradient_fit(model, Y, opt);
  w.write("fit.json", dump_json(fit_report(r)) + "\n");
}

void run_metrics(Fields& p, const std::string& base, Writer& w) {
  KernelMatrix Ka = kernel_ref(p.raw("kernel_a"), p.at("kernel_a"), base);
  KernelMatrix Kb = kernel_ref(p.raw("kernel_b"), p.at("kernel_b"), base);
  const std::string labels = p.req<std::string>("labels");
  const int drop = p.get<int>("drop_count", 1);
  p.finish();
  std::vector<int> lab;
  try {
    lab = read_label_csv(resolve(base, labels));
  } catch (const InvalidInput& ex) {
    throw ConfigError(p.at("labels"), ex.what());
  }
  if (Ka.size() != Kb.size()) throw ConfigError(p.at("kernel_b"), "size differs from kernel_a");
  if (static_cast<Index>(lab.size()) != Ka.size()) throw ConfigError(p.at("labels"), "label count must match kernel size");
  Matrix Y = one_hot(lab);
  MetricReport rb = metric_report(Kb, Ka, Y, drop);
  MetricReport ra = metric_report(Ka, Ka, Y, drop);
  json out = {{"kernel", to_json(rb)}, {"reference", to_json(ra)}, {"correlation", rb.correlation}};
  w.write("metrics.json", dump_json(out) + "\n");
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char d[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), d);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned char c : d) {
    s += hex[c >> 4];
    s += hex[c & 15];
  }
  return s;
}

json Manifest::to_json() const {
  json files = json::array();
  for (const auto& f : this->files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"experiment", experiment}, {"files", files}};
}

Manifest run_experiment(const json& config, const RunOverrides& ov, const std::string& base_dir) {
  Fields top(config, "");
  const std::string exp = top.req<std::string>("experiment");
  std::optional<std::uint64_t> seed;
  if (top.has("seed")) seed = top.req<std::uint64_t>("seed");
  if (ov.seed) seed = ov.seed;
  std::string out_dir = top.get<std::string>("output_dir", "out");
  if (ov.output_dir) out_dir = *ov.output_dir;
  else out_dir = resolve(base_dir, out_dir);
  json empty = json::object();
  const json& params_json = top.has("parameters") ? top.raw("parameters") : empty;
  top.finish();
  Fields params(params_json, "parameters");
  static const std::set<std::string> known{"toy-evidence", "prior-variance", "posterior-interp", "sumkernel-fit",
                                           "metrics"};
  if (!known.count(exp)) throw ConfigError("experiment", "unknown experiment '" + exp + "'");
  if (exp != "posterior-interp" && (ov.k0 || ov.kout || ov.widths || ov.method))
    throw ConfigError("", "--k0/--kout/--widths/--method only apply to posterior-interp");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir + ": " + ec.message());
  Writer w(out_dir);
  Manifest m;
  m.experiment = exp;
  try {
    if (exp == "toy-evidence")
      run_toy(params, seed, w);
    else if (exp == "prior-variance")
      run_prior(params, seed, w);
    else if (exp == "posterior-interp")
      run_posterior(params, ov, base_dir, w);
    else if (exp == "sumkernel-fit")
      run_sumkernel(params, seed, base_dir, w);
    else
      run_metrics(params, base_dir, w);
    m.files = w.entries();
    w.write("manifest.json", dump_json(m.to_json()) + "\n");
  } catch (...) {
    w.rollback();
    throw;
  }
  return m;
}

Manifest run_experiment_file(const std::string& config_path, const RunOverrides& ov) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("", "cannot open config file " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw ConfigError("", config_path + ": " + ex.what());
  }
  fs::path base = fs::path(config_path).parent_path();
  return run_experiment(j, ov, base.empty() ? "." : base.string());
}

}  // namespace kernelflow
