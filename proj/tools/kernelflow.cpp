#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kernelflow/errors.hpp"
#include "kernelflow/harness.hpp"

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("--config", a.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", a.seed, "root seed, overrides the config");
  sub->add_option("--out", a.out, "output directory, overrides the config");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernelflow: kernel flexibility experiments for finite and infinite linear networks"};
  app.require_subcommand(1);
  Args args;
  kernelflow::RunOverrides ov;
  const char* names[] = {"toy-evidence", "prior-variance", "posterior-interp", "sumkernel-fit", "metrics"};
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, args);
    if (std::string(name) == "posterior-interp") {
      sub->add_option("--k0", ov.k0, "input kernel JSON");
      sub->add_option("--kout", ov.kout, "output kernel JSON");
      sub->add_option("--widths", ov.widths, "comma-separated N_1..N_{L+1}");
      sub->add_option("--method", ov.method, "map or langevin")->check(CLI::IsMember({"map", "langevin"}));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  ov.seed = args.seed;
  ov.output_dir = args.out;
  try {
    nlohmann::json cfg;
    {
      std::ifstream in(args.config);
      in >> cfg;
    }
    if (!cfg.is_object()) throw kernelflow::ConfigError("", "config must be a JSON object");
    if (cfg.contains("experiment") && cfg["experiment"] != sub)
      throw kernelflow::ConfigError("experiment", "config is for '" + cfg["experiment"].dump() + "', not " + sub);
    if (!cfg.contains("experiment")) cfg["experiment"] = sub;
    std::filesystem::path base = std::filesystem::path(args.config).parent_path();
    auto m = kernelflow::run_experiment(cfg, ov, base.empty() ? "." : base.string());
    for (const auto& f : m.files) std::cout << f.sha256 << "  " << f.path << "\n";
    return 0;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kernelflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kernelflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
