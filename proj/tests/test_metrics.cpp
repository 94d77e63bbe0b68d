#include <doctest.h>

#include <cmath>
#include <vector>

#include "featpca/metrics.hpp"
#include "featpca/rng.hpp"

using namespace featpca;

namespace {

// Independent O(n^2) oracle: explicit pair counting, then the
// chance-corrected formula on those counts.
struct PairCounts {
    long long both_same = 0, same_a = 0, same_b = 0, total = 0;
};

PairCounts count_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    PairCounts c;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            ++c.total;
            if (a[i] == a[j]) ++c.same_a;
            if (b[i] == b[j]) ++c.same_b;
            if (a[i] == a[j] && b[i] == b[j]) ++c.both_same;
        }
    return c;
}

double oracle_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    const auto c = count_pairs(a, b);
    const long long both_diff = c.total - c.same_a - c.same_b + c.both_same;
    return static_cast<double>(c.both_same + both_diff) / static_cast<double>(c.total);
}

double oracle_ari(const std::vector<int>& a, const std::vector<int>& b) {
    const auto c = count_pairs(a, b);
    const double expected =
        static_cast<double>(c.same_a) * static_cast<double>(c.same_b) / c.total;
    const double max_index = 0.5 * (c.same_a + c.same_b);
    if (max_index == expected) return 0.0;
    return (c.both_same - expected) / (max_index - expected);
}

// Enumerate all set partitions of {0..n-1} as restricted growth strings.
void enumerate_partitions(int n, std::vector<std::vector<int>>& out) {
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int i, int max_used) {
        if (i == n) {
            out.push_back(labels);
            return;
        }
        for (int l = 0; l <= max_used + 1; ++l) {
            labels[static_cast<std::size_t>(i)] = l;
            rec(i + 1, std::max(max_used, l));
        }
    };
    rec(0, -1);
}

}  // namespace

TEST_CASE("rand index basics") {
    CHECK(rand_index({0, 1, 2}, {0, 1, 2}) == doctest::Approx(1.0));
    CHECK(rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(1.0 / 3.0));
    CHECK(rand_index({0, 1}, {0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("ari basics") {
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    // label permutation of the same partition
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    // one-cluster prediction is exactly chance level
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(rand_index({0, 1}, {0, 1, 2}), ValidationError);
    CHECK_THROWS_AS(rand_index({0}, {0}), ValidationError);
    CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0}), ValidationError);
}

TEST_CASE("symmetry and permutation invariance on random labelings") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> a(30), b(30);
        for (auto& x : a) x = static_cast<int>(rng.next_below(4));
        for (auto& x : b) x = static_cast<int>(rng.next_below(5));
        a[0] = 0; b[0] = 0;  // keep label 0 present
        CHECK(adjusted_rand_index(a, b) == doctest::Approx(adjusted_rand_index(b, a)));
        CHECK(rand_index(a, b) == doctest::Approx(rand_index(b, a)));

        // relabel b by a fixed permutation of its label ids
        std::vector<int> relabeled = b;
        for (auto& x : relabeled) x = (x + 2) % 5;
        CHECK(adjusted_rand_index(a, relabeled) == doctest::Approx(adjusted_rand_index(a, b)));
    }
}

TEST_CASE("exhaustive oracle equivalence up to n = 6") {
    for (int n = 2; n <= 6; ++n) {
        std::vector<std::vector<int>> parts;
        enumerate_partitions(n, parts);
        for (const auto& a : parts)
            for (const auto& b : parts) {
                CHECK(std::abs(adjusted_rand_index(a, b) - oracle_ari(a, b)) < 1e-12);
                CHECK(std::abs(rand_index(a, b) - oracle_rand_index(a, b)) < 1e-12);
            }
    }
}

TEST_CASE("ari of random labelings averages to roughly zero") {
    Rng rng(11);
    double sum = 0.0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        std::vector<int> a(50), b(50);
        for (auto& x : a) x = static_cast<int>(rng.next_below(4));
        for (auto& x : b) x = static_cast<int>(rng.next_below(4));
        sum += adjusted_rand_index(a, b);
    }
    CHECK(std::abs(sum / trials) < 0.02);
}
