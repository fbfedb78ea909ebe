#pragma once

#include <array>
#include <cstdint>

namespace beliefmap {

// Name recorded in run metadata so artifacts are self-describing.
inline constexpr const char* kRngAlgorithm = "xoshiro256++";

namespace detail {
inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace detail

// SplitMix64, used to expand a 64-bit seed into generator state and to
// derive independent sub-streams (env / policy / selector / init / replay).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// xoshiro256++ (Blackman & Vigna). Portable, all arithmetic on uint64,
// so sequences are identical on every platform.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  static Rng from_state(const std::array<std::uint64_t, 4>& s) {
    Rng r;
    r.s_ = s;
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 significant bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer on [0, n). Modulo rejection keeps the draw exact.
  int uniform_int(int n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    std::uint64_t x, r;
    do {
      x = next_u64();
      r = x % bound;
    } while (x - r > std::uint64_t(0) - bound);
    return static_cast<int>(r);
  }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Per-run stream bundle. Streams are seeded from consecutive SplitMix64
// outputs of the master seed, in this fixed order, so changing how one
// stream is consumed never perturbs the others.
struct RunRngs {
  Rng env;
  Rng policy;
  Rng selector;
  Rng init;
  Rng replay;

  static RunRngs from_seed(std::uint64_t master_seed) {
    SplitMix64 sm(master_seed);
    RunRngs r;
    r.env = Rng(sm.next());
    r.policy = Rng(sm.next());
    r.selector = Rng(sm.next());
    r.init = Rng(sm.next());
    r.replay = Rng(sm.next());
    return r;
  }
};

}  // namespace beliefmap
