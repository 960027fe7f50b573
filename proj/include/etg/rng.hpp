#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Deterministic randomness helpers. The engine is std::mt19937_64, whose
// output sequence is pinned by the standard; the distributions below are
// hand-rolled because the <random> distribution classes are allowed to
// differ across standard libraries, and identical seeds must produce
// byte-identical models everywhere.

namespace etg::rng {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed for logical stream `stream` under a master seed. Streams are
/// independent of the order they are drawn in, so parallel and serial
/// training see the same per-tree randomness.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
}

/// Uniform integer in [0, n). Rejection sampling, unbiased. n must be > 0.
inline std::uint64_t bounded(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = eng();
  while (x >= limit) x = eng();
  return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& values, Engine& eng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded(eng, i));
    std::swap(values[i - 1], values[j]);
  }
}

/// k distinct values from [0, n), partial Fisher-Yates. Order is random.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                           Engine& eng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(eng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace etg::rng
