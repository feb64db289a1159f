#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace kernelflow {

/// One element of a seed label path: a name or an index.
using SeedLabel = std::variant<std::string, std::uint64_t>;

/// Derives a child seed from a root seed and an ordered label path.
///
/// The derivation is the first eight bytes (little endian) of SHA-256 over a
/// tagged, length-prefixed encoding of the root and every label, so distinct
/// paths collide only with cryptographic improbability and the values never
/// change between releases. Labels must be non-empty.
std::uint64_t seed_stream(std::uint64_t root, const std::vector<SeedLabel>& labels);

/// Convenience overload so call sites can write `seed_stream(s, {"mc", i})`.
std::uint64_t seed_stream(std::uint64_t root, std::initializer_list<SeedLabel> labels);

/// Engine used for every stochastic component.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::initializer_list<SeedLabel> labels) {
  return Rng(seed_stream(root, labels));
}

}  // namespace kernelflow
