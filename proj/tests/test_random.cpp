#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cclb/random.hpp"

using cclb::CounterStream;
using cclb::PhiloxCounter;

// Known-answer vectors published with the Random123 library.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(cclb::philox4x32({0, 0, 0, 0}, {0, 0}), (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(cclb::philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(cclb::philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterStream, Deterministic) {
  CounterStream a(42, 3, 7), b(42, 3, 7), c(42, 3, 8), d(43, 3, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    differs_c = differs_c || va != c.next_u64();
    differs_d = differs_d || va != d.next_u64();
  }
  EXPECT_TRUE(differs_c);
  EXPECT_TRUE(differs_d);
}

TEST(CounterStream, BlockReadsMatchSequential) {
  for (std::uint32_t block = 0; block < 20; ++block) {
    CounterStream s(9, 1, 0);
    for (std::uint32_t skip = 0; skip < block; ++skip) {
      s.next_u64();
      s.next_u64();
    }
    const CounterStream fresh(9, 1, 0);
    EXPECT_EQ(fresh.block_u64(block), s.next_u64()) << block;
  }
}

TEST(CounterStream, Ranges) {
  CounterStream s(1, 0, 0);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  std::set<std::uint64_t> seen;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = s.uniform_index(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 4 * std::sqrt(10000.0 * 6 / 7));
  EXPECT_EQ(s.uniform_index(1), 0u);
}
