#pragma once

#include <cstdint>
#include <vector>

#include "featpca/errors.hpp"
#include "featpca/matrix.hpp"

namespace featpca {

/// Joint label-count table between two clusterings of the same n elements.
struct ContingencyTable {
    std::vector<std::vector<std::int64_t>> counts;  // C_true x C_pred
    std::vector<std::int64_t> row_marginals;
    std::vector<std::int64_t> col_marginals;
    std::int64_t n = 0;

    static ContingencyTable from(const std::vector<int>& a, const std::vector<int>& b) {
        if (a.size() != b.size())
            throw ValidationError("labelings have different lengths");
        int ca = 0, cb = 0;
        for (int x : a) {
            if (x < 0) throw ValidationError("negative label");
            ca = std::max(ca, x + 1);
        }
        for (int x : b) {
            if (x < 0) throw ValidationError("negative label");
            cb = std::max(cb, x + 1);
        }
        ContingencyTable t;
        t.n = static_cast<std::int64_t>(a.size());
        t.counts.assign(static_cast<std::size_t>(ca),
                        std::vector<std::int64_t>(static_cast<std::size_t>(cb), 0));
        t.row_marginals.assign(static_cast<std::size_t>(ca), 0);
        t.col_marginals.assign(static_cast<std::size_t>(cb), 0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            ++t.counts[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
            ++t.row_marginals[static_cast<std::size_t>(a[i])];
            ++t.col_marginals[static_cast<std::size_t>(b[i])];
        }
        return t;
    }
};

namespace detail {

// C(x, 2) in 128-bit; pair-count sums stay exact well past 32-bit n.
inline __int128 choose2(std::int64_t x) {
    return static_cast<__int128>(x) * (x - 1) / 2;
}

}  // namespace detail

/// Rand index via the contingency table, equal to the O(n^2) pair-count
/// definition: (same-same agreements + different-different agreements) / C(n,2).
inline double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ValidationError("labelings have different lengths");
    if (a.size() < 2) throw ValidationError("rand index needs n >= 2");
    const auto t = ContingencyTable::from(a, b);

    __int128 sum_ij = 0;
    for (const auto& row : t.counts)
        for (std::int64_t c : row) sum_ij += detail::choose2(c);
    __int128 sum_a = 0, sum_b = 0;
    for (std::int64_t c : t.row_marginals) sum_a += detail::choose2(c);
    for (std::int64_t c : t.col_marginals) sum_b += detail::choose2(c);
    const __int128 total = detail::choose2(t.n);
    // agreements = both-same + both-different
    const __int128 agreements = sum_ij + (total - sum_a - sum_b + sum_ij);
    return static_cast<double>(agreements) / static_cast<double>(total);
}

/// Chance-corrected Rand index. Returns 0 when the adjustment denominator
/// vanishes (both labelings trivial).
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ValidationError("labelings have different lengths");
    if (a.size() < 2) throw ValidationError("adjusted rand index needs n >= 2");
    const auto t = ContingencyTable::from(a, b);

    __int128 sum_ij = 0;
    for (const auto& row : t.counts)
        for (std::int64_t c : row) sum_ij += detail::choose2(c);
    __int128 sum_a = 0, sum_b = 0;
    for (std::int64_t c : t.row_marginals) sum_a += detail::choose2(c);
    for (std::int64_t c : t.col_marginals) sum_b += detail::choose2(c);
    const double total = static_cast<double>(detail::choose2(t.n));

    const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / total;
    const double max_index = 0.5 * (static_cast<double>(sum_a) + static_cast<double>(sum_b));
    const double denom = max_index - expected;
    if (denom == 0.0) return 0.0;
    return (static_cast<double>(sum_ij) - expected) / denom;
}

inline double rand_index(const LabelSet& a, const LabelSet& b) {
    return rand_index(a.labels, b.labels);
}

inline double adjusted_rand_index(const LabelSet& a, const LabelSet& b) {
    return adjusted_rand_index(a.labels, b.labels);
}

}  // namespace featpca
