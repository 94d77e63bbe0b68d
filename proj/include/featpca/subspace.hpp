#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "featpca/errors.hpp"
#include "featpca/rng.hpp"

namespace featpca {

enum class Strategy { Sequential, Shuffled, Random, GeneCluster };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Sequential: return "sequential";
        case Strategy::Shuffled: return "shuffled";
        case Strategy::Random: return "random";
        case Strategy::GeneCluster: return "gene_cluster";
    }
    return "?";
}

inline Strategy strategy_from_name(const std::string& s) {
    if (s == "sequential") return Strategy::Sequential;
    if (s == "shuffled") return Strategy::Shuffled;
    if (s == "random") return Strategy::Random;
    if (s == "gene_cluster") return Strategy::GeneCluster;
    throw ValidationError("unknown strategy: " + s);
}

/// Ordered gene-index partitions, possibly overlapping. Every gene index
/// in [0, d') appears in at least one partition; no partition repeats an
/// index.
struct SubspaceSpec {
    std::vector<std::vector<int>> partitions;
    Strategy strategy = Strategy::Sequential;
    double overlap_fraction = 0.25;
    std::uint64_t seed = 0;

    int k() const { return static_cast<int>(partitions.size()); }

    void validate(int d_prime) const {
        if (partitions.empty()) throw ValidationError("no partitions");
        std::vector<char> covered(static_cast<std::size_t>(d_prime), 0);
        for (const auto& p : partitions) {
            if (p.empty()) throw ValidationError("empty partition");
            std::unordered_set<int> seen;
            for (int g : p) {
                if (g < 0 || g >= d_prime)
                    throw ValidationError("gene index out of range: " + std::to_string(g));
                if (!seen.insert(g).second)
                    throw ValidationError("duplicate index within a partition: " +
                                          std::to_string(g));
                covered[static_cast<std::size_t>(g)] = 1;
            }
        }
        for (int g = 0; g < d_prime; ++g)
            if (!covered[static_cast<std::size_t>(g)])
                throw ValidationError("gene " + std::to_string(g) + " not covered");
    }
};

namespace detail {

// Window geometry shared by strategies 1-2: base = ceil(d'/k),
// o = round(f*base), windows of length base+o advancing by base.
// A trailing fragment of length <= o is pure overlap and is merged
// into the previous window.
inline std::vector<std::pair<int, int>> sequential_windows(int d_prime, int k,
                                                           double overlap_fraction) {
    if (k < 2) throw ValidationError("k must be >= 2");
    if (d_prime < k) throw ValidationError("d' must be >= k");
    const int base = (d_prime + k - 1) / k;
    const int o = static_cast<int>(std::lround(overlap_fraction * base));
    const int size = base + o;
    const int stride = size - o;  // == base

    std::vector<std::pair<int, int>> windows;  // [start, end)
    for (int s = 0; s < d_prime; s += stride)
        windows.emplace_back(s, std::min(s + size, d_prime));
    if (windows.size() > 1 && windows.back().second - windows.back().first <= o) {
        windows[windows.size() - 2].second = windows.back().second;
        windows.pop_back();
    }
    return windows;
}

}  // namespace detail

/// Strategy 1: contiguous windows over the gene axis with adjacent
/// windows sharing o indices.
inline SubspaceSpec sequential_subspaces(int d_prime, int k, double overlap_fraction) {
    SubspaceSpec spec;
    spec.strategy = Strategy::Sequential;
    spec.overlap_fraction = overlap_fraction;
    for (auto [s, e] : detail::sequential_windows(d_prime, k, overlap_fraction)) {
        std::vector<int> part(static_cast<std::size_t>(e - s));
        std::iota(part.begin(), part.end(), s);
        spec.partitions.push_back(std::move(part));
    }
    return spec;
}

/// Strategy 2: same window geometry over a seeded random permutation of
/// the gene indices.
inline SubspaceSpec shuffled_subspaces(int d_prime, int k, double overlap_fraction,
                                       std::uint64_t seed) {
    std::vector<int> perm(static_cast<std::size_t>(d_prime));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    SubspaceSpec spec;
    spec.strategy = Strategy::Shuffled;
    spec.overlap_fraction = overlap_fraction;
    spec.seed = seed;
    for (auto [s, e] : detail::sequential_windows(d_prime, k, overlap_fraction)) {
        spec.partitions.emplace_back(perm.begin() + s, perm.begin() + e);
    }
    return spec;
}

/// Strategy 3: k buckets. Phase 1 assigns every gene to exactly one
/// bucket by shuffled round-robin; phase 2 adds uniformly drawn
/// (gene, bucket) pairs, rejecting within-bucket duplicates, until total
/// assignments reach round((1+f)*d'), the overlap budget of
/// strategies 1-2.
inline SubspaceSpec random_bucket_subspaces(int d_prime, int k, double overlap_fraction,
                                            std::uint64_t seed) {
    if (k < 2) throw ValidationError("k must be >= 2");
    if (d_prime < k) throw ValidationError("d' must be >= k");

    Rng rng(seed);
    std::vector<int> perm(static_cast<std::size_t>(d_prime));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(k));
    std::vector<std::unordered_set<int>> member(static_cast<std::size_t>(k));
    for (int i = 0; i < d_prime; ++i) {
        const auto b = static_cast<std::size_t>(i % k);
        buckets[b].push_back(perm[static_cast<std::size_t>(i)]);
        member[b].insert(perm[static_cast<std::size_t>(i)]);
    }

    const long budget = std::lround((1.0 + overlap_fraction) * d_prime);
    long assigned = d_prime;
    while (assigned < budget) {
        const int g = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d_prime)));
        const auto b = static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(k)));
        if (member[b].insert(g).second) {
            buckets[b].push_back(g);
            ++assigned;
        }
    }

    SubspaceSpec spec;
    spec.strategy = Strategy::Random;
    spec.overlap_fraction = overlap_fraction;
    spec.seed = seed;
    spec.partitions = std::move(buckets);
    return spec;
}

}  // namespace featpca
