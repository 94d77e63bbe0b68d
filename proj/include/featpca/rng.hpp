#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace featpca {

/// Small deterministic RNG used everywhere randomness is needed.
/// std::shuffle / std::uniform_int_distribution are implementation-defined,
/// so all sampling primitives are spelled out here to keep outputs stable
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // splitmix64
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, unbiased.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform real in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform real in [lo, hi).
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Standard normal via Box-Muller (cached second draw).
    double next_gaussian();

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double cached_gaussian_ = 0.0;
    bool has_cached_ = false;
};

/// Derives a per-stage child seed from a master seed. Each pipeline stage
/// (shuffle, buckets, autoencoder, K-means, Leiden, per-trial K-means)
/// owns a distinct stream id; the mapping is documented at the call sites.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    Rng r(master ^ (0xA0761D6478BD642Full * (stream + 1)));
    return r.next_u64();
}

inline double Rng::next_gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_gaussian_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_gaussian_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

}  // namespace featpca
