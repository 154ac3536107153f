#include "cfseq/rng.hpp"

#include <algorithm>

namespace cfseq {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed);
  for (const auto key : keys) {
    h = mix64(h ^ mix64(key + 0x632BE59BD9B4E019ULL));
  }
  return h;
}

Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Rng{derive_seed(seed, keys)};
}

double uniform01(Rng& rng) {
  // 53 random mantissa bits; independent of the standard library's distribution code.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) {
    return static_cast<std::int64_t>(rng());
  }
  // Lemire-style rejection to avoid modulo bias.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % span);
  std::uint64_t r = rng();
  while (r >= limit) {
    r = rng();
  }
  return lo + static_cast<std::int64_t>(r % span);
}

double clipped_standard_normal(Rng& rng) {
  std::normal_distribution<double> normal{0.0, 1.0};
  return std::clamp(normal(rng), 0.0, 1.0);
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (const double w : weights) {
    total += w;
  }
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) {
      continue;
    }
    acc += weights[i];
    last_positive = i;
    if (target < acc) {
      return i;
    }
  }
  return last_positive;
}

}  // namespace cfseq
