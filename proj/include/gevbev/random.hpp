#pragma once

#include <cstdint>

namespace gevbev {

/// splitmix64 finalizer. Used to derive independent per-stage seeds from the scenario
/// seed so that no stage shares an RNG stream with another.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stage offsets for mix_seed. Per-agent streams add the agent index.
namespace seed_stream {
inline constexpr std::uint64_t raycast = 0x100;
inline constexpr std::uint64_t geometric_augment = 0x200;
inline constexpr std::uint64_t road_targets = 0x300;
inline constexpr std::uint64_t object_targets = 0x400;
inline constexpr std::uint64_t anchor_sampling = 0x500;
inline constexpr std::uint64_t scene_generation = 0x600;
}  // namespace seed_stream

}  // namespace gevbev
