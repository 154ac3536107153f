#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace cfseq {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a generator from a root seed and a path of stream keys, e.g.
/// `derive_rng(seed, {cycle, pair})`. Equal inputs give equal streams, so work
/// can be scheduled in any order without changing results.
Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

/// Uniform real in [0, 1).
double uniform01(Rng& rng);

/// Uniform integer in [lo, hi] (inclusive).
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

/// Standard normal sample clipped into [0, 1].
double clipped_standard_normal(Rng& rng);

/// Draws an index with probability proportional to `weights` (non-negative,
/// positive sum). Falls back to the last positive entry on round-off.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

}  // namespace cfseq
