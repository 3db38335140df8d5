#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace imputebench {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a seed path; stable across platforms and runs.
inline constexpr std::uint64_t stableHash(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (auto part : parts) h = splitmix64(h ^ splitmix64(part));
  return h;
}

/// FNV-1a, for folding text labels (method names) into seeds.
inline constexpr std::uint64_t hashText(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return stableHash({seed, stream});
}

/// n indices drawn uniformly with replacement from [0, n).
inline std::vector<Eigen::Index> bootstrapSample(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  for (auto& idx : out) idx = pick(rng);
  return out;
}

}  // namespace imputebench
