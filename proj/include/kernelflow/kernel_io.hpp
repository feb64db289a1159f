#pragma once

#include "json.hpp"
#include <string>

#include "kernelflow/kernel_core.hpp"

namespace kernelflow {

/// Shortest text form that round-trips: printf "%.17g".
std::string fmt17(double v);

/// {"size": P, "entries": [row-major P*P reals]}
nlohmann::json kernel_to_json(const KernelMatrix& K);
KernelMatrix kernel_from_json(const nlohmann::json& j);

KernelMatrix read_kernel_file(const std::string& path);
void write_kernel_file(const std::string& path, const KernelMatrix& K);

/// Header "i,j,value", one row per upper-triangle entry (j >= i).
std::string kernel_to_csv(const KernelMatrix& K);

/// Serializes with numbers printed via fmt17 so files round-trip bit for bit.
std::string dump_json(const nlohmann::json& j, int indent = 2);

}  // namespace kernelflow
