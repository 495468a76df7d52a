#include "mmwce/rng.hpp"

#include <cmath>

namespace mmwce {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

Complex complex_normal(Rng& rng, double variance) {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * kScale;
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  const double r = std::sqrt(-std::log(u1) * variance);
  return std::polar(r, 2.0 * kPi * u2);
}

double uniform(Rng& rng, double lo, double hi) {
  constexpr double kScale = 1.0 / 9007199254740992.0;
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * kScale);
}

}  // namespace mmwce
