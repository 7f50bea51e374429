#pragma once

#include <cstdint>
#include <vector>

namespace pam {

// SplitMix64: tiny, fully specified generator. Used wherever reproducibility
// across platforms and standard-library versions matters (fold shuffles).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform-enough draw from [0, bound); bound must be non-zero.
    uint64_t below(uint64_t bound) { return next() % bound; }

private:
    uint64_t state_;
};

// In-place Fisher-Yates with a caller-supplied generator.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    SplitMix64 g(seed ^ (salt * 0x9e3779b97f4a7c15ull));
    return g.next();
}

}  // namespace pam
