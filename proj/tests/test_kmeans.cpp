#include <doctest.h>

#include <cmath>
#include <limits>

#include "featpca/kmeans.hpp"
#include "featpca/metrics.hpp"
#include "featpca/rng.hpp"

using namespace featpca;

namespace {

Matrix random_points(Eigen::Index n, Eigen::Index q, Rng& rng) {
    Matrix m(n, q);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.next_gaussian();
    return m;
}

// Exhaustive oracle: try every assignment of n points to k labels and
// score with optimal (centroid) centers. Feasible for k^n up to ~1e6.
double brute_force_optimum(const Matrix& points, int k) {
    const auto n = points.rows();
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    long long total = 1;
    for (Eigen::Index i = 0; i < n; ++i) total *= k;
    for (long long code = 0; code < total; ++code) {
        long long c = code;
        for (Eigen::Index i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = static_cast<int>(c % k);
            c /= k;
        }
        Matrix centers = Matrix::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            centers.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        bool feasible = true;
        for (int j = 0; j < k; ++j) {
            if (counts[static_cast<std::size_t>(j)] == 0) {
                feasible = false;
                break;
            }
            centers.row(j) /= counts[static_cast<std::size_t>(j)];
        }
        if (!feasible) continue;
        double inertia = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            inertia +=
                (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        best = std::min(best, inertia);
    }
    return best;
}

}  // namespace

TEST_CASE("well-separated 1-D groups") {
    Matrix pts(4, 1);
    pts << 0.0, 0.1, 10.0, 10.1;
    KmeansConfig cfg;
    cfg.n_clusters = 2;
    cfg.seed = 3;
    const auto res = kmeans(pts, cfg);
    CHECK(res.inertia == doctest::Approx(0.01));
    CHECK(res.labels[0] == res.labels[1]);
    CHECK(res.labels[2] == res.labels[3]);
    CHECK(res.labels[0] != res.labels[2]);
}

TEST_CASE("k=1 gives total scatter about the centroid") {
    Rng rng(5);
    const Matrix pts = random_points(20, 3, rng);
    KmeansConfig cfg;
    cfg.n_clusters = 1;
    const auto res = kmeans(pts, cfg);
    const Matrix centered = pts.rowwise() - pts.colwise().mean();
    CHECK(res.inertia == doctest::Approx(centered.squaredNorm()));
    for (int l : res.labels) CHECK(l == 0);
}

TEST_CASE("finds the global optimum on the enumerable instance") {
    Rng rng(12);
    Matrix pts(12, 2);
    // three loose clumps
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 4; ++i) {
            pts(c * 4 + i, 0) = 5.0 * c + rng.next_gaussian();
            pts(c * 4 + i, 1) = 3.0 * c + rng.next_gaussian();
        }
    const double optimum = brute_force_optimum(pts, 3);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        KmeansConfig cfg;
        cfg.n_clusters = 3;
        cfg.seed = seed;
        if (kmeans(pts, cfg).inertia <= optimum * (1 + 1e-9)) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("per-iteration inertia is non-increasing") {
    Rng rng(77);
    for (int t = 0; t < 20; ++t) {
        const Matrix pts = random_points(40, 3, rng);
        Rng init_rng(t);
        const Matrix init = detail::kmeanspp_init(pts, 4, init_rng);
        const auto res = detail::lloyd(pts, init, 100, 0.0);
        for (std::size_t i = 1; i < res.inertia_trace.size(); ++i)
            CHECK(res.inertia_trace[i] <= res.inertia_trace[i - 1] + 1e-9);
    }
}

TEST_CASE("translation invariance for a fixed seed") {
    Rng rng(9);
    const Matrix pts = random_points(30, 2, rng);
    Matrix shifted = pts;
    shifted.col(0).array() += 100.0;
    shifted.col(1).array() -= 42.0;
    KmeansConfig cfg;
    cfg.n_clusters = 3;
    cfg.seed = 4;
    CHECK(kmeans(pts, cfg).labels == kmeans(shifted, cfg).labels);
}

TEST_CASE("restart comparisons agree up to relabeling") {
    Rng rng(13);
    const Matrix pts = random_points(60, 2, rng);
    KmeansConfig a, b;
    a.n_clusters = b.n_clusters = 3;
    a.seed = 1;
    b.seed = 2;
    const auto ra = kmeans(pts, a);
    const auto rb = kmeans(pts, b);
    // different seeds may relabel; compare with ARI, not raw equality
    CHECK(adjusted_rand_index(ra.labels, rb.labels) > 0.0);
}

TEST_CASE("validation") {
    KmeansConfig cfg;
    cfg.n_clusters = 5;
    CHECK_THROWS_AS(kmeans(Matrix::Zero(3, 2), cfg), ValidationError);
}

TEST_CASE("determinism") {
    Rng rng(15);
    const Matrix pts = random_points(25, 4, rng);
    KmeansConfig cfg;
    cfg.n_clusters = 4;
    cfg.seed = 21;
    const auto a = kmeans(pts, cfg);
    const auto b = kmeans(pts, cfg);
    CHECK(a.labels == b.labels);
    CHECK(a.inertia == b.inertia);
}
