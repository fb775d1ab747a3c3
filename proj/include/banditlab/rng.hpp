#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace banditlab {

// SplitMix64 finalizer; good avalanche, used only to derive substream seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Hashes a list of stream identifiers into one seed. Every random stream in
// the project is keyed this way so that streams never alias each other.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) h = splitmix64(h ^ p);
  return h;
}

inline std::mt19937_64 make_engine(std::initializer_list<std::uint64_t> parts) {
  return std::mt19937_64(mix_seed(parts));
}

// Fixed tags keeping independent streams apart.
namespace stream {
inline constexpr std::uint64_t round_arms = 0x01;
inline constexpr std::uint64_t reward_noise = 0x02;
inline constexpr std::uint64_t hidden_param = 0x03;
inline constexpr std::uint64_t epoch_shuffle = 0x04;
inline constexpr std::uint64_t policy_rng = 0x05;
inline constexpr std::uint64_t f1_init = 0x06;
inline constexpr std::uint64_t f2_init = 0x07;
inline constexpr std::uint64_t projector = 0x08;
}  // namespace stream

}  // namespace banditlab
