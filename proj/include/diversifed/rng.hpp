#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace diversifed {

using Engine = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from an ordered tuple of integers
/// (master seed, purpose tag, client, round, ...). Streams never depend on
/// execution order, which keeps threaded runs reproducible.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

inline Engine make_engine(std::initializer_list<std::uint64_t> parts) {
  return Engine{derive_seed(parts)};
}

// Purpose tags keep streams for different consumers apart.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kParticipation = 3;
inline constexpr std::uint64_t kPartition = 4;
inline constexpr std::uint64_t kDataset = 5;
}  // namespace stream

}  // namespace diversifed
