#pragma once

// Reproducible stream-indexed RNG: xoshiro256++ cores seeded by hashing
// (seed, stream_id) through SplitMix64.  A stream's output depends only on
// (seed, stream_id, draw index), never on thread count or interleaving with
// other streams, so every Monte Carlo estimate in the solver is replayable.

#include <array>
#include <cmath>
#include <cstdint>

namespace fracdpi {

struct SplitMix64 {
  std::uint64_t x;
  std::uint64_t next() {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    SplitMix64 sm{seed};
    sm.x = sm.next() ^ stream_id;
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // unreachable in practice
  }

  explicit RngStream(const std::array<std::uint64_t, 4>& raw_state) : s_(raw_state) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1): the single value 0 (probability 2^-53) is nudged up so
  // that log/U and 1/sin(pi U) stay finite.
  double uniform_pos() {
    const double u = uniform();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925287 * u2;
    cached_ = rad * std::sin(ang);
    have_cached_ = true;
    return rad * std::cos(ang);
  }

  // Exp(1).
  double exponential() { return -std::log(uniform_pos()); }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::array<std::uint64_t, 4> s_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Stream-id layout: purpose(8) | iteration(8) | point index(32) | path index(16).
// One stream per (collocation point, path) pair; auxiliary draws (collocation
// sampling, network init, minibatch shuffling, evaluation grids) get their own
// purpose byte so no sequence is ever shared between uses.
enum class StreamPurpose : std::uint64_t {
  collocation = 1,
  trajectory = 2,
  network_init = 3,
  shuffle = 4,
  evaluation = 5,
};

inline std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t iteration,
                                    std::uint64_t point, std::uint64_t path) {
  return (static_cast<std::uint64_t>(purpose) << 56) | ((iteration & 0xffull) << 48) |
         ((point & 0xffffffffull) << 16) | (path & 0xffffull);
}

}  // namespace fracdpi
