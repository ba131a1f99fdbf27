#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sdprel {

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a64(std::string_view text,
                             std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named sub-seed: every random consumer ("vocab-init", "folds", "dropout",
/// "tuner", ...) draws from its own stream derived from the run seed.
inline std::uint64_t sub_seed(std::uint64_t seed, std::string_view name) {
  return splitmix64(seed ^ fnv1a64(name));
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::string_view name,
                              std::uint64_t index) {
  return splitmix64(sub_seed(seed, name) + splitmix64(index));
}

}  // namespace sdprel
