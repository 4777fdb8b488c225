#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fedtick/errors.hpp"

// Deterministic randomness. Every consumer of randomness in the library draws
// from a stream derived from (master seed, purpose tag, indices), so replaying
// a run with the same seed reproduces it bit-for-bit regardless of execution
// order, and parallel/sequential client execution agree.
//
// Distributions are hand-rolled on top of std::mt19937_64 because the standard
// leaves distribution algorithms implementation-defined; the engine output must
// not depend on the standard library vendor.

namespace fedtick {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream labels keep unrelated consumers of the same master seed decorrelated.
enum class StreamTag : std::uint64_t {
  federation_build = 1,
  client_sampling = 2,
  client_local = 3,
  minibatch = 4,
  gradient_noise = 5,
  generic = 6,
  beta_jitter = 7,
  param_init = 8,
};

inline std::uint64_t derive_stream(std::uint64_t master, StreamTag tag,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection keeps it exactly uniform.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw ContractViolation("uniform_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (cosine branch only, stateless).
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

// n_pick distinct indices from [0, n_total), uniformly, returned sorted so
// downstream reductions run in a fixed order.
inline std::vector<int> sample_without_replacement(int n_total, int n_pick, Rng& rng) {
  if (n_pick < 0 || n_pick > n_total)
    throw ContractViolation("sample_without_replacement: need 0 <= n_pick <= n_total");
  std::vector<int> pool(static_cast<std::size_t>(n_total));
  for (int i = 0; i < n_total; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < n_pick; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n_total - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(n_pick));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace fedtick
