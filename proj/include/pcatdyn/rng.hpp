#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pcatdyn::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1]; never 0 so it is safe inside log().
inline double uniform01(std::uint64_t h) {
    return (double((h >> 11) & ((1ULL << 53) - 1)) + 1.0) * 0x1p-53;
}

// Counter-based Gaussian draw: the same (seed, counter) always yields the
// same value, so parallel fills stay independent of thread count.
inline double gaussian(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t h1 = splitmix64(seed ^ splitmix64(counter));
    const std::uint64_t h2 = splitmix64(h1 ^ 0x5851f42d4c957f2dULL);
    const double u1 = uniform01(h1);
    const double u2 = uniform01(h2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pcatdyn::rng
