#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tcs {

using Rng = std::mt19937_64;

// Every random draw in the pipeline comes from a stream keyed by
// (seed, purpose, ordinal). Streams are seeded through std::seed_seq, whose
// output is fixed by the standard, so a given key always yields the same
// sequence and adding a new purpose never shifts an existing one.
Rng make_stream(std::uint64_t seed, std::string_view purpose, std::uint64_t ordinal = 0);

// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n); n must be positive. Rejection sampling keeps
// the result unbiased and independent of the standard library version.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Standard normal via Box-Muller on two uniform01 draws.
double standard_normal(Rng& rng);

}  // namespace tcs
