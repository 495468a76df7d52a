#pragma once

#include <cstdint>
#include <random>

#include "mmwce/numerics.hpp"

namespace mmwce {

using Rng = std::mt19937_64;

/// Seed splitting for Monte-Carlo workers: every (stream, index) pair gets an
/// independent 64-bit seed obtained by chaining splitmix64 over
/// master -> stream -> index. Results never depend on worker scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

/// Stream identifiers used by the simulation pipeline.
enum class SeedStream : std::uint64_t {
  kChannel = 1,
  kSensingPlan = 2,
  kUplinkNoise = 3,
  kTrainingNoise = 4,
  kValidation = 5,
};

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index = 0) {
  return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

/// Circularly-symmetric complex Gaussian with E|x|^2 = variance.
Complex complex_normal(Rng& rng, double variance);

double uniform(Rng& rng, double lo, double hi);

}  // namespace mmwce
