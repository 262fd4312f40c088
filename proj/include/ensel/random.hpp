#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace ensel {

using Rng = std::mt19937_64;

// splitmix64 finalizer
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and any number of tags.
template <class... Tags>
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base, Tags... tags) noexcept {
  std::uint64_t s = mix64(base);
  ((s = mix64(s ^ mix64(static_cast<std::uint64_t>(tags) + 0x632be59bd9b4e019ULL))), ...);
  return s;
}

// FNV-1a; stable across platforms, used to key streams by query id.
[[nodiscard]] constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Order-insensitive digest of a set of indices.
[[nodiscard]] inline std::uint64_t hash_indices(std::span<const std::size_t> items) {
  std::vector<std::size_t> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = mix64(sorted.size());
  for (auto v : sorted) h = mix64(h ^ (static_cast<std::uint64_t>(v) + 1));
  return h;
}

}  // namespace ensel
