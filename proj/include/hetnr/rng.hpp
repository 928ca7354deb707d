#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hetnr {

// splitmix64 step (Steele et al.); the generator behind all seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

// Every random stream in the project is keyed (root, purpose, index) so that
// sub-seeds stay stable when unrelated code changes. Purposes in use:
// "synthetic", "splits", "init", "dropout", "walks", "search", "sample",
// "oracle", "fixture".
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                 std::uint64_t index = 0) {
  std::uint64_t state = root ^ fnv1a64(purpose);
  splitmix64(state);
  state ^= 0x9e3779b97f4a7c15ULL * (index + 1);
  splitmix64(state);
  return splitmix64(state);
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view purpose,
                                std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(root, purpose, index));
}

}  // namespace hetnr
