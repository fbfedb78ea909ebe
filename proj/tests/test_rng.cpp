#include <catch2/catch_amalgamated.hpp>

#include <cstdint>

#include "beliefmap/rng.hpp"

namespace {

// Reference splitmix64 / xoshiro256++ (public-domain algorithms by Vigna et
// al.), written here with free functions and global state so the oracle
// shares no code with the implementation.
std::uint64_t ref_sm_state;

std::uint64_t ref_splitmix64() {
  std::uint64_t z = (ref_sm_state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t ref_xo_state[4];

std::uint64_t ref_rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t ref_xoshiro256pp() {
  const std::uint64_t result = ref_rotl(ref_xo_state[0] + ref_xo_state[3], 23) + ref_xo_state[0];
  const std::uint64_t t = ref_xo_state[1] << 17;
  ref_xo_state[2] ^= ref_xo_state[0];
  ref_xo_state[3] ^= ref_xo_state[1];
  ref_xo_state[1] ^= ref_xo_state[2];
  ref_xo_state[0] ^= ref_xo_state[3];
  ref_xo_state[2] ^= t;
  ref_xo_state[3] = ref_rotl(ref_xo_state[3], 45);
  return result;
}

}  // namespace

TEST_CASE("xoshiro256++ matches the reference implementation") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL, 0xffffffffffffffffULL}) {
    ref_sm_state = seed;
    for (auto& w : ref_xo_state) w = ref_splitmix64();
    beliefmap::Rng rng(seed);
    for (int i = 0; i < 1000; ++i) REQUIRE(rng.next_u64() == ref_xoshiro256pp());
  }
}

TEST_CASE("identical seeds give identical streams") {
  beliefmap::Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform() lies in [0,1) and uniform_int in range") {
  beliefmap::Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const int k = rng.uniform_int(13);
    REQUIRE(k >= 0);
    REQUIRE(k < 13);
  }
}

TEST_CASE("uniform_int(13) is unbiased within 4 sigma") {
  beliefmap::Rng rng(99);
  const int n = 130000;
  int counts[13] = {};
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(13)];
  const double expected = n / 13.0;
  const double sigma = std::sqrt(n * (1.0 / 13) * (12.0 / 13));
  for (int k = 0; k < 13; ++k) REQUIRE(std::abs(counts[k] - expected) < 4 * sigma);
}

TEST_CASE("stream derivation is stable and independent per stream") {
  auto r1 = beliefmap::RunRngs::from_seed(5);
  auto r2 = beliefmap::RunRngs::from_seed(5);
  REQUIRE(r1.env.next_u64() == r2.env.next_u64());
  REQUIRE(r1.policy.next_u64() == r2.policy.next_u64());
  // consuming one stream must not shift another
  auto r3 = beliefmap::RunRngs::from_seed(6);
  auto r4 = beliefmap::RunRngs::from_seed(6);
  for (int i = 0; i < 50; ++i) r3.env.next_u64();
  REQUIRE(r3.policy.next_u64() == r4.policy.next_u64());
}
