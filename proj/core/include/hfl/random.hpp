// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace hfl {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds from one base seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named RNG streams. Each consumer of randomness gets its own stream so that
/// adding draws in one place never perturbs another.
enum class Stream : std::uint64_t {
  kTopology = 1,
  kShadowing,
  kScheduler,
  kKMeans,
  kData,
  kModelInit,
  kEnvironment,
  kExploration,
  kMinibatch,
  kNetworkInit,
  kHfelShuffle,
  kEvaluation,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(stream))));
}

}  // namespace hfl
