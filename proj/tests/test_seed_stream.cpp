#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>

#include "kernelflow/errors.hpp"
#include "kernelflow/seed_stream.hpp"

using namespace kernelflow;

TEST(SeedStream, Deterministic) {
  EXPECT_EQ(seed_stream(42, {"mc", 3u}), seed_stream(42, {"mc", 3u}));
}

TEST(SeedStream, SensitiveToEveryComponent) {
  const auto base = seed_stream(1, {"a", 2u});
  EXPECT_NE(base, seed_stream(2, {"a", 2u}));
  EXPECT_NE(base, seed_stream(1, {"b", 2u}));
  EXPECT_NE(base, seed_stream(1, {"a", 3u}));
  EXPECT_NE(base, seed_stream(1, {"a"}));
  EXPECT_NE(base, seed_stream(1, {"a", 2u, 0u}));
  // a string label never aliases a numeric one
  EXPECT_NE(seed_stream(1, {"2"}), seed_stream(1, {2u}));
}

TEST(SeedStream, EmptyPathRejected) {
  EXPECT_THROW(seed_stream(0, std::vector<SeedLabel>{}), InvalidInput);
}

TEST(SeedStream, NoCollisionsOverMillionPaths) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(1'100'000);
  for (std::uint64_t i = 0; i < 500'000; ++i) {
    seen.insert(seed_stream(7, {"mc", i}));
    seen.insert(seed_stream(7, {"network", i}));
  }
  EXPECT_EQ(seen.size(), 1'000'000u);
}

TEST(SeedStream, GoldenVector) {
  std::ifstream in(std::string(KERNELFLOW_TEST_DATA) + "/golden/seed_stream.txt");
  ASSERT_TRUE(in.good());
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    // root label0 label1 expected
    std::istringstream ss(line);
    std::uint64_t root, idx, expected;
    std::string tag;
    ss >> root >> tag >> idx >> expected;
    EXPECT_EQ(seed_stream(root, {tag, idx}), expected) << line;
    ++checked;
  }
  EXPECT_GE(checked, 1);
}
