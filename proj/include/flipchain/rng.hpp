#pragma once

#include <cstdint>
#include <random>

namespace flipchain {

/// SplitMix64 step; used to derive independent seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream derivation: trajectory k of a run always gets the
/// same seed regardless of thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t x = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    splitmix64(x);
    return splitmix64(x);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

} // namespace flipchain
