#include "kernelflow/seed_stream.hpp"

#include <openssl/sha.h>

#include "kernelflow/errors.hpp"

namespace kernelflow {
namespace {

void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace

std::uint64_t seed_stream(std::uint64_t root, const std::vector<SeedLabel>& labels) {
  if (labels.empty()) throw InvalidInput("seed_stream: label path must be non-empty");
  // layout: "kfseed1" | root | count | (tag, len, bytes)*
  std::vector<unsigned char> buf{'k', 'f', 's', 'e', 'e', 'd', '1'};
  put_u64(buf, root);
  put_u64(buf, labels.size());
  for (const auto& l : labels) {
    if (const auto* s = std::get_if<std::string>(&l)) {
      buf.push_back('s');
      put_u64(buf, s->size());
      buf.insert(buf.end(), s->begin(), s->end());
    } else {
      buf.push_back('u');
      put_u64(buf, std::get<std::uint64_t>(l));
    }
  }
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(buf.data(), buf.size(), digest);
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= static_cast<std::uint64_t>(digest[i]) << (8 * i);
  return out;
}

std::uint64_t seed_stream(std::uint64_t root, std::initializer_list<SeedLabel> labels) {
  return seed_stream(root, std::vector<SeedLabel>(labels));
}

}  // namespace kernelflow
