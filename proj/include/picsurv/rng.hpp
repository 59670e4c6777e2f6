#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace picsurv {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// The 64-bit seed is the key; the upper half of the 128-bit counter selects a
// substream, the lower half counts blocks within it. Distinct (seed, stream)
// pairs never share output blocks.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    stream_ = stream;
    block_index_ = 0;
    pos_ = 4;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ >= 4) refill();
    const std::uint64_t lo = buf_[pos_++];
    const std::uint64_t hi = buf_[pos_++];
    return (hi << 32) | lo;
  }

  static Block bijection(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  void refill() {
    const Block ctr{static_cast<std::uint32_t>(block_index_),
                    static_cast<std::uint32_t>(block_index_ >> 32),
                    static_cast<std::uint32_t>(stream_),
                    static_cast<std::uint32_t>(stream_ >> 32)};
    buf_ = bijection(ctr, key_);
    ++block_index_;
    pos_ = 0;
  }

  Key key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_index_ = 0;
  Block buf_{};
  int pos_ = 4;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Child seed for task `index` of kind `tag` under `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(tag)) + index);
}

// Distributions written out explicitly so draws are identical across standard
// library implementations.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed = 0, std::uint64_t stream = 0) : engine_(seed, stream) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential() { return -std::log(uniform()); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Gamma with integer shape, as a sum of exponentials.
  double gamma_int(int shape, double scale) {
    double s = 0.0;
    for (int i = 0; i < shape; ++i) s += exponential();
    return s * scale;
  }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  Philox4x32 engine_;
};

}  // namespace picsurv
