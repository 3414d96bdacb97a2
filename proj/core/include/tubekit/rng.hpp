#pragma once

#include <cstdint>
#include <random>

namespace tubekit {

// Seed derivation utilities. Every random quantity in the toolkit draws from
// an engine seeded by mixing a master seed with the integers identifying the
// quantity (stream tag, frame index, quantized coordinates, ...), so results
// are reproducible and independent of evaluation order.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over a string literal; used to give named random streams distinct
// seeds ("proposals", "reg-noise", ...).
constexpr std::uint64_t stream_tag(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s != '\0'; ++s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*s));
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t mix_seed(std::uint64_t a) { return splitmix64(a); }

template <class... Rest>
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix_seed(splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2))), rest...);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

template <class... Parts>
std::mt19937_64 make_rng(std::uint64_t seed, Parts... parts) {
  return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(parts)...));
}

}  // namespace tubekit
