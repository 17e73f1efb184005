#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ergo/rng.hpp"
#include "ergo/stats.hpp"

using namespace ergo::rng;

// Known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswerZero) {
  const Counter out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const Counter out =
      philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const Counter out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterStream, RandomAccessMatchesEngine) {
  const StreamKey key{42, 7, Substream::marks};
  CounterStream s(key);
  Engine e(key);
  for (std::uint64_t c = 0; c < 5; ++c) {
    const Counter b = s.block(c);
    EXPECT_EQ(e(), (std::uint64_t{b[1]} << 32) | b[0]);
    EXPECT_EQ(e(), (std::uint64_t{b[3]} << 32) | b[2]);
  }
}

TEST(CounterStream, SubstreamsAndPathsDiffer) {
  const CounterStream a({1, 0, Substream::brownian});
  const CounterStream b({1, 0, Substream::jump_times});
  const CounterStream c({1, 1, Substream::brownian});
  const CounterStream d({2, 0, Substream::brownian});
  std::set<Counter> blocks{a.block(0), b.block(0), c.block(0), d.block(0)};
  EXPECT_EQ(blocks.size(), 4u);
}

TEST(CounterStream, UniformsInOpenInterval) {
  EXPECT_GT(to_open_unit(0), 0.0);
  EXPECT_LT(to_open_unit(~std::uint64_t{0}), 1.0);
}

TEST(CounterStream, NormalMoments) {
  const CounterStream s({123, 0, Substream::brownian});
  ergo::stats::Moments m, m4;
  for (std::uint64_t c = 0; c < 100000; ++c) {
    for (double z : s.normal_pair(c)) {
      m.add(z);
      m4.add(z * z * z * z);
    }
  }
  EXPECT_NEAR(m.mean(), 0.0, 4.0 * m.stderr_of_mean());
  EXPECT_NEAR(m.variance(), 1.0, 0.02);
  EXPECT_NEAR(m4.mean(), 3.0, 0.05);
}

TEST(Engine, ExponentialMean) {
  Engine e({9, 3, Substream::jump_times});
  ergo::stats::Moments m;
  for (int i = 0; i < 200000; ++i) m.add(exponential(e, 4.0));
  EXPECT_NEAR(m.mean(), 0.25, 4.0 * m.stderr_of_mean());
}

TEST(Seeds, DeriveSeedIsStableAndDistinct) {
  EXPECT_EQ(derive_seed(5, 1), derive_seed(5, 1));
  EXPECT_NE(derive_seed(5, 1), derive_seed(5, 2));
  EXPECT_NE(derive_seed(5, 1), 5u);
}
