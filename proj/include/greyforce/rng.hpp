#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace greyforce {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable across platforms and runs (std::hash is not).
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for a named component, independent of which other components exist.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view component) noexcept {
  return mix64(master ^ mix64(fnv1a(component)));
}

// Seed for the i-th member of a family (MC path, repeat run, grid cell).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) + 0x632be59bd9b4e019ULL * (index + 1));
}

}  // namespace greyforce
