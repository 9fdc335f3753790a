#pragma once

#include <cstdint>
#include <random>

// Deterministic stream derivation. Every stochastic component draws from an
// mt19937_64 seeded through derive_stream, keyed by (master_seed, agent,
// round), so parallel scheduling cannot reorder draws.

namespace fedq {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t agent, std::uint64_t round) {
    std::uint64_t s = splitmix64(master_seed);
    s = splitmix64(s ^ (0xa0761d6478bd642fULL + agent));
    s = splitmix64(s ^ (0xe7037ed1a0b428dbULL + round));
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t stream_seed) { return std::mt19937_64(stream_seed); }

}  // namespace fedq
