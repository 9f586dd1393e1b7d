#pragma once

#include <cmath>
#include <cstdint>

namespace lossykf {

// Counter-based generator. Every draw is a pure function of a key
// (seed, path, stream, step, lane), so paths can be generated in any
// order, in parallel, with identical results. The construction is the
// SplitMix64 finalizer chained over the key words; all operations are
// exact 64-bit integer arithmetic, so the bit stream is identical on
// every conforming platform.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
  arrival = 1,
  chain_transition = 2,
  chain_initial = 3,
  process_noise = 4,
  measurement_noise = 5,
  initial_state = 6,
  matrix_sampling = 7,
};

struct RandomKey {
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  Stream stream = Stream::arrival;
  std::uint64_t step = 0;
  std::uint64_t lane = 0;
};

inline std::uint64_t keyed_bits(const RandomKey& k) {
  std::uint64_t h = mix64(k.seed);
  h = mix64(h ^ k.path);
  h = mix64(h ^ static_cast<std::uint64_t>(k.stream));
  h = mix64(h ^ k.step);
  h = mix64(h ^ k.lane);
  return h;
}

// Uniform on [0, 1) with 53 significant bits.
inline double keyed_uniform(const RandomKey& k) {
  return static_cast<double>(keyed_bits(k) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes lanes (2*lane, 2*lane+1).
inline double keyed_normal(RandomKey k) {
  const std::uint64_t lane = k.lane;
  k.lane = 2 * lane;
  const double u1 = static_cast<double>((keyed_bits(k) >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  k.lane = 2 * lane + 1;
  const double u2 = keyed_uniform(k);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace lossykf
