#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace adaseg {

/// FNV-1a over raw bytes. Used for config hashes and checkpoint checksums.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

/// Deterministic 64-bit random stream (splitmix64).
///
/// Every random decision in the project flows through this generator so that
/// runs are bit-reproducible for a given seed. std:: distributions are avoided
/// on purpose: their output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1.
    uint64_t below(uint64_t n) {
        uint64_t v = static_cast<uint64_t>(uniform() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

    bool coin() { return (next_u64() & 1ull) != 0; }

    /// Box-Muller, one value per call (the sibling value is discarded so the
    /// stream advances by exactly two draws per normal).
    double normal(double mean, double stddev) {
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent stream derived from (seed, tag, index).
    static Rng derive(uint64_t seed, std::string_view tag, uint64_t index = 0) {
        uint64_t h = fnv1a64(tag);
        h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h ^= index + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        Rng r(h);
        r.next_u64();  // decorrelate nearby derivations
        return r;
    }

private:
    uint64_t state_;
};

}  // namespace adaseg
