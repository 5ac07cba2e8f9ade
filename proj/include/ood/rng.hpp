#ifndef OOD_RNG_HPP
#define OOD_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace ood {

// FNV-1a over the stage label, mixed with the master seed. Used to fan a
// single master seed out into independent per-stage seeds, so adding a new
// stage never perturbs the randomness consumed by existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : stage) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    h ^= master + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    // splitmix64 finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

} // namespace ood

#endif
