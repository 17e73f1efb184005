#pragma once

// Counter-based random streams.
//
// Every random quantity in a simulation is addressed by
// (master_seed, path_index, substream, counter). Coupled processes share
// exactly the substreams the coupling prescribes, and results do not depend
// on the order in which paths are scheduled.

#include <array>
#include <cstdint>
#include <limits>

namespace ergo::rng {

enum class Substream : std::uint32_t {
  brownian = 1,
  jump_times = 2,
  marks = 3,
  bridge = 4,
  sampler = 5,
  bootstrap = 6,
  reference = 7,
  replica = 8,
};

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
Counter philox4x32(Counter ctr, Key key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an unrelated master seed, e.g. for an independent replica ensemble.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt) noexcept;

struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
  Substream substream = Substream::brownian;
};

/// Random access into one stream: block `counter` yields four 32-bit words.
class CounterStream {
 public:
  explicit CounterStream(const StreamKey& key) noexcept;

  Counter block(std::uint64_t counter) const noexcept;

  /// Two uniforms in the open interval (0, 1).
  std::array<double, 2> uniform_pair(std::uint64_t counter) const noexcept;

  /// Two independent standard normals (Box-Muller on `uniform_pair`).
  std::array<double, 2> normal_pair(std::uint64_t counter) const noexcept;

 private:
  Key key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
};

/// Sequential UniformRandomBitGenerator over a CounterStream.
class Engine {
 public:
  using result_type = std::uint64_t;

  explicit Engine(const StreamKey& key, std::uint64_t first_counter = 0) noexcept
      : stream_(key), counter_(first_counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

 private:
  CounterStream stream_;
  std::uint64_t counter_;
  Counter buffer_{};
  int used_ = 4;
};

double to_open_unit(std::uint64_t bits) noexcept;

double uniform01(Engine& engine) noexcept;
double standard_normal(Engine& engine) noexcept;
double exponential(Engine& engine, double rate) noexcept;

}  // namespace ergo::rng
