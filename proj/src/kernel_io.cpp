#include "kernelflow/kernel_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kernelflow/errors.hpp"

namespace kernelflow {

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json kernel_to_json(const KernelMatrix& K) {
  nlohmann::json entries = nlohmann::json::array();
  for (Index i = 0; i < K.size(); ++i)
    for (Index j = 0; j < K.size(); ++j) entries.push_back(K(i, j));
  return {{"size", K.size()}, {"entries", entries}};
}

KernelMatrix kernel_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("size") || !j.contains("entries"))
    throw InvalidInput("kernel JSON needs \"size\" and \"entries\"");
  const auto P = j.at("size").get<long>();
  const auto& e = j.at("entries");
  if (P < 0 || !e.is_array() || static_cast<long>(e.size()) != P * P)
    throw InvalidInput("kernel JSON: entries length must be size^2");
  Matrix K(P, P);
  for (long i = 0; i < P; ++i)
    for (long k = 0; k < P; ++k) {
      const auto& v = e[static_cast<std::size_t>(i * P + k)];
      if (!v.is_number()) throw InvalidInput("kernel JSON: entries must be numbers");
      K(i, k) = v.get<double>();
    }
  return KernelMatrix(K);
}

KernelMatrix read_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open kernel file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(path + ": " + ex.what());
  }
  return kernel_from_json(j);
}

void write_kernel_file(const std::string& path, const KernelMatrix& K) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << dump_json(kernel_to_json(K)) << '\n';
}

std::string kernel_to_csv(const KernelMatrix& K) {
  std::string s = "i,j,value\n";
  for (Index i = 0; i < K.size(); ++i)
    for (Index j = i; j < K.size(); ++j)
      s += std::to_string(i) + "," + std::to_string(j) + "," + fmt17(K(i, j)) + "\n";
  return s;
}

namespace {

void dump_rec(const nlohmann::json& j, int indent, int depth, std::string& out) {
  auto pad = [&](int d) {
    if (indent >= 0) {
      out += '\n';
      out.append(static_cast<std::size_t>(indent * d), ' ');
    }
  };
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        pad(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += indent >= 0 ? ": " : ":";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      pad(depth);
      out += '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric arrays stay on one line
      bool flat = std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_primitive(); });
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat ? ", " : ",";
        if (!flat) pad(depth + 1);
        dump_rec(j[i], indent, depth + 1, out);
      }
      if (!flat) pad(depth);
      out += ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      double v = j.get<double>();
      out += std::isfinite(v) ? fmt17(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  return out;
}

}  // namespace kernelflow
