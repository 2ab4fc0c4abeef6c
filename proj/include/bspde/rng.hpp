#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bspde::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4a0debf9c7dbaULL;
  return x ^ (x >> 31);
}

/// Counter-indexed draw c from the stream keyed by `key`: the splitmix64
/// output function applied to the c-th state, so any draw is addressable
/// without generating its predecessors.
inline std::uint64_t stream_at(std::uint64_t key, std::uint64_t c) {
  return mix64(key + (c + 1) * kGamma);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t lane) {
  return mix64(seed ^ mix64((lane + 1) * kGamma));
}

/// Uniform in [0, 1).
inline double uniform01(std::uint64_t key, std::uint64_t c) {
  return static_cast<double>(stream_at(key, c) >> 11) * 0x1.0p-53;
}

/// Gaussian pair via Box-Muller from two counter-indexed uniform draws.
inline void normal_pair(std::uint64_t key, std::uint64_t pair_index, double& g0,
                        double& g1) {
  const double u1 =
      (static_cast<double>(stream_at(key, 2 * pair_index) >> 11) + 1.0) *
      0x1.0p-53;  // in (0, 1], keeps the log finite
  const double u2 = uniform01(key, 2 * pair_index + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  g0 = r * std::cos(a);
  g1 = r * std::sin(a);
}

/// Single Gaussian draw; spends two uniforms per call.
inline double normal(std::uint64_t key, std::uint64_t index) {
  double g0, g1;
  normal_pair(key, index, g0, g1);
  return g0;
}

}  // namespace bspde::rng
