#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pushsort {

enum class SeedStream : std::uint64_t {
  Environment = 1,
  NetworkInit = 2,
  Replay = 3,
  Exploration = 4,
  MaskInit = 5,
};

/// Counter-based split of one run seed into independent component seeds
/// (splitmix64 finalizer over seed + stream * golden ratio).
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

std::string serialize_rng(const std::mt19937_64& rng);
std::mt19937_64 deserialize_rng(const std::string& text);

}  // namespace pushsort
