// rng.hpp - seed mixing and engine construction. Every stochastic operation in
// the library is a pure function of (inputs, seed); substreams are derived by
// mixing a base seed with a stream id so chains/chunks stay independent.
#pragma once

#include <cstdint>
#include <random>

namespace grrecon {

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace grrecon
