#pragma once

#include <cstdint>
#include <random>

namespace reveal {

using Rng = std::mt19937_64;

/// Independent child seed for a named stream (splitmix64 finalizer over both
/// inputs). Keeps scene, sampling, init and dropout streams decoupled.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace stream {
inline constexpr std::uint64_t shadow = 1;
inline constexpr std::uint64_t sampling = 2;
inline constexpr std::uint64_t holdout = 3;
inline constexpr std::uint64_t noise = 4;
inline constexpr std::uint64_t init = 5;
inline constexpr std::uint64_t dropout = 6;
}  // namespace stream

}  // namespace reveal
