#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace kernelflow {

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct Manifest {
  std::string experiment;
  std::vector<ManifestEntry> files;
  nlohmann::json to_json() const;
};

/// Command-line values that take precedence over the config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> k0, kout, widths, method;  // posterior-interp only
};

/// Validates the config (unknown keys rejected with their field path), runs the
/// experiment and writes its files plus manifest.json. On failure every file
/// written so far is removed. `base_dir` resolves relative paths in the config.
Manifest run_experiment(const nlohmann::json& config, const RunOverrides& overrides = {},
                        const std::string& base_dir = ".");

Manifest run_experiment_file(const std::string& config_path, const RunOverrides& overrides = {});

std::string sha256_hex(const std::string& bytes);

}  // namespace kernelflow
