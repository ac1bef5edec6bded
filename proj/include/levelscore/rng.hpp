#pragma once

#include <cstdint>

namespace levelscore {

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent child seed for task `index` under `root`. Used wherever work is
/// split into parallel cells so results do not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
  return splitmix64(root + 0x9E3779B97F4A7C15ull * (index + 1));
}

}  // namespace levelscore
