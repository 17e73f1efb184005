#include "ergo/rng.hpp"

#include <cmath>
#include <numbers>

namespace ergo::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Counter philox_round(const Counter& c, const Key& k) noexcept {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Counter philox4x32(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = philox_round(ctr, key);
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt) noexcept {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(~salt));
}

CounterStream::CounterStream(const StreamKey& key) noexcept {
  const std::uint64_t sub = static_cast<std::uint64_t>(key.substream);
  const std::uint64_t k =
      splitmix64(splitmix64(key.master_seed) ^ (sub * 0x9E3779B97F4A7C15ull));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  path_lo_ = static_cast<std::uint32_t>(key.path_index);
  path_hi_ = static_cast<std::uint32_t>(key.path_index >> 32);
}

Counter CounterStream::block(std::uint64_t counter) const noexcept {
  return philox4x32({static_cast<std::uint32_t>(counter),
                     static_cast<std::uint32_t>(counter >> 32), path_lo_, path_hi_},
                    key_);
}

double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

std::array<double, 2> CounterStream::uniform_pair(std::uint64_t counter) const noexcept {
  const Counter c = block(counter);
  const std::uint64_t a = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
  const std::uint64_t b = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
  return {to_open_unit(a), to_open_unit(b)};
}

std::array<double, 2> CounterStream::normal_pair(std::uint64_t counter) const noexcept {
  const auto [u1, u2] = uniform_pair(counter);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(angle), r * std::sin(angle)};
}

Engine::result_type Engine::operator()() noexcept {
  if (used_ >= 4) {
    buffer_ = stream_.block(counter_++);
    used_ = 0;
  }
  const std::uint64_t lo = buffer_[used_];
  const std::uint64_t hi = buffer_[used_ + 1];
  used_ += 2;
  return (hi << 32) | lo;
}

double uniform01(Engine& engine) noexcept { return to_open_unit(engine()); }

double standard_normal(Engine& engine) noexcept {
  const double u1 = uniform01(engine);
  const double u2 = uniform01(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double exponential(Engine& engine, double rate) noexcept {
  return -std::log(uniform01(engine)) / rate;
}

}  // namespace ergo::rng
