#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "featpca/errors.hpp"
#include "featpca/matrix.hpp"
#include "featpca/rng.hpp"

namespace featpca {

struct KmeansConfig {
    int n_clusters = 2;
    int n_init = 10;
    int max_iter = 300;
    double tol = 1e-6;
    std::uint64_t seed = 0;

    void validate(Eigen::Index n) const {
        if (n_clusters < 1) throw ValidationError("n_clusters must be >= 1");
        if (n_clusters > n)
            throw ValidationError("n_clusters exceeds point count");
        if (n_init < 1) throw ValidationError("n_init must be >= 1");
        if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
        if (tol < 0) throw ValidationError("tol must be >= 0");
    }
};

struct ClusterAssignment {
    std::vector<int> labels;
    double inertia = 0.0;
    int n_iter = 0;
};

namespace detail {

// k-means++ seeding: first center uniform, then each next center drawn
// with probability proportional to squared distance to the nearest
// chosen center.
inline Matrix kmeanspp_init(const Matrix& points, int k, Rng& rng) {
    const auto n = points.rows();
    Matrix centers(k, points.cols());
    const auto first = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    centers.row(0) = points.row(first);

    Vector d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0) {
            double target = rng.next_double() * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= d2(i);
                if (target <= 0) {
                    pick = i;
                    break;
                }
                pick = i;  // numeric slack: fall through to the last point
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
        }
        centers.row(c) = points.row(pick);
        d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

struct LloydResult {
    std::vector<int> labels;
    double inertia;
    int n_iter;
    std::vector<double> inertia_trace;  // inertia after each assignment step
};

inline LloydResult lloyd(const Matrix& points, Matrix centers, int max_iter, double tol) {
    const auto n = points.rows();
    const int k = static_cast<int>(centers.rows());
    LloydResult res;
    res.labels.assign(static_cast<std::size_t>(n), 0);
    res.inertia = std::numeric_limits<double>::infinity();
    res.n_iter = 0;

    for (int iter = 0; iter < max_iter; ++iter) {
        // Assignment step.
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int bestc = 0;
            for (int c = 0; c < k; ++c) {
                const double d = (points.row(i) - centers.row(c)).squaredNorm();
                if (d < best) {
                    best = d;
                    bestc = c;
                }
            }
            res.labels[static_cast<std::size_t>(i)] = bestc;
            inertia += best;
        }
        res.inertia = inertia;
        res.inertia_trace.push_back(inertia);
        res.n_iter = iter + 1;

        // Update step.
        Matrix next = Matrix::Zero(k, points.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            next.row(res.labels[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // Empty cluster: reseed at the point farthest from its own center.
                double far = -1.0;
                Eigen::Index fi = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d =
                        (points.row(i) - centers.row(res.labels[static_cast<std::size_t>(i)]))
                            .squaredNorm();
                    if (d > far) {
                        far = d;
                        fi = i;
                    }
                }
                next.row(c) = points.row(fi);
            }
        }

        const double shift = (next - centers).rowwise().norm().maxCoeff();
        centers = std::move(next);
        if (shift <= tol) break;
    }

    // Final assignment against the converged centers.
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int bestc = 0;
        for (int c = 0; c < k; ++c) {
            const double d = (points.row(i) - centers.row(c)).squaredNorm();
            if (d < best) {
                best = d;
                bestc = c;
            }
        }
        res.labels[static_cast<std::size_t>(i)] = bestc;
        inertia += best;
    }
    res.inertia = inertia;
    res.inertia_trace.push_back(inertia);
    return res;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding, best of n_init restarts by
/// (inertia, restart index). Deterministic given cfg.seed.
inline ClusterAssignment kmeans(const Matrix& points, const KmeansConfig& cfg) {
    cfg.validate(points.rows());
    ClusterAssignment best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.n_init; ++r) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        const Matrix init = detail::kmeanspp_init(points, cfg.n_clusters, rng);
        auto res = detail::lloyd(points, init, cfg.max_iter, cfg.tol);
        if (res.inertia < best.inertia) {
            best.labels = std::move(res.labels);
            best.inertia = res.inertia;
            best.n_iter = res.n_iter;
        }
    }
    if (!std::isfinite(best.inertia)) throw NumericalError("kmeans produced non-finite inertia");
    return best;
}

}  // namespace featpca
