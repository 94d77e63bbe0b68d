#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "featpca/errors.hpp"
#include "featpca/matrix.hpp"

namespace featpca {

struct HvgConfig {
    double target_sum = 1e4;
    int n_top_genes = 10000;
    int n_bins = 20;

    void validate() const {
        if (target_sum <= 0) throw ValidationError("target_sum must be > 0");
        if (n_top_genes < 1) throw ValidationError("n_top_genes must be >= 1");
        if (n_bins < 1) throw ValidationError("n_bins must be >= 1");
    }
};

/// Scales every cell (row) to the same total count, then applies ln(1+x).
inline ExpressionMatrix normalize_log(const ExpressionMatrix& m, double target_sum) {
    if (target_sum <= 0) throw ValidationError("target_sum must be > 0");
    if ((m.values.array() < 0).any())
        throw ValidationError("normalize_log requires non-negative values");

    ExpressionMatrix out;
    out.cell_ids = m.cell_ids;
    out.gene_ids = m.gene_ids;
    out.values.resize(m.n_cells(), m.n_genes());
    for (Eigen::Index i = 0; i < m.n_cells(); ++i) {
        const double total = m.values.row(i).sum();
        if (total <= 0)
            throw ValidationError("cell '" + m.cell_ids[static_cast<std::size_t>(i)] +
                                  "' has zero total count");
        out.values.row(i) = (m.values.row(i).array() * (target_sum / total) + 1.0).log();
    }
    return out;
}

namespace detail {

struct GeneStats {
    double mean;
    double dispersion;  // population variance / mean, 0 when mean == 0
};

inline std::vector<GeneStats> gene_stats(const Matrix& v) {
    const auto n = v.rows();
    std::vector<GeneStats> stats(static_cast<std::size_t>(v.cols()));
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double mean = v.col(j).mean();
        const double var = (v.col(j).array() - mean).square().sum() / static_cast<double>(n);
        stats[static_cast<std::size_t>(j)] = {mean, mean > 0 ? var / mean : 0.0};
    }
    return stats;
}

}  // namespace detail

/// Keeps the top n_top_genes by mean-binned z-scored dispersion
/// (variance/mean on the log-normalized values, z-scored within
/// equal-width mean bins). Output columns are ordered by descending
/// rank; ties break by ascending gene index.
inline ExpressionMatrix select_hvg(const ExpressionMatrix& m, const HvgConfig& cfg) {
    cfg.validate();
    const auto d = m.n_genes();
    if (d < 1) throw ValidationError("select_hvg requires at least one gene");
    const auto stats = detail::gene_stats(m.values);

    // Equal-width bins over the observed mean range.
    double lo = stats[0].mean, hi = stats[0].mean;
    for (const auto& s : stats) {
        lo = std::min(lo, s.mean);
        hi = std::max(hi, s.mean);
    }
    const double width = hi - lo;
    std::vector<int> bin_of(static_cast<std::size_t>(d), 0);
    if (width > 0) {
        for (Eigen::Index j = 0; j < d; ++j) {
            int b = static_cast<int>((stats[static_cast<std::size_t>(j)].mean - lo) / width *
                                     cfg.n_bins);
            bin_of[static_cast<std::size_t>(j)] = std::min(b, cfg.n_bins - 1);
        }
    }

    // Per-bin dispersion mean/std; bins with one gene (or zero spread) get z = 0.
    std::vector<double> bin_sum(static_cast<std::size_t>(cfg.n_bins), 0.0);
    std::vector<double> bin_sumsq(static_cast<std::size_t>(cfg.n_bins), 0.0);
    std::vector<int> bin_count(static_cast<std::size_t>(cfg.n_bins), 0);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto b = static_cast<std::size_t>(bin_of[static_cast<std::size_t>(j)]);
        const double disp = stats[static_cast<std::size_t>(j)].dispersion;
        bin_sum[b] += disp;
        bin_sumsq[b] += disp * disp;
        ++bin_count[b];
    }
    std::vector<double> zscore(static_cast<std::size_t>(d), 0.0);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto b = static_cast<std::size_t>(bin_of[static_cast<std::size_t>(j)]);
        if (bin_count[b] < 2) continue;
        const double mean = bin_sum[b] / bin_count[b];
        const double var = bin_sumsq[b] / bin_count[b] - mean * mean;
        const double sd = var > 0 ? std::sqrt(var) : 0.0;
        if (sd > 0)
            zscore[static_cast<std::size_t>(j)] =
                (stats[static_cast<std::size_t>(j)].dispersion - mean) / sd;
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return zscore[static_cast<std::size_t>(a)] > zscore[static_cast<std::size_t>(b)];
    });
    const auto keep = std::min<Eigen::Index>(cfg.n_top_genes, d);

    ExpressionMatrix out;
    out.cell_ids = m.cell_ids;
    out.values.resize(m.n_cells(), keep);
    out.gene_ids.reserve(static_cast<std::size_t>(keep));
    for (Eigen::Index r = 0; r < keep; ++r) {
        const auto j = order[static_cast<std::size_t>(r)];
        out.values.col(r) = m.values.col(j);
        out.gene_ids.push_back(m.gene_ids[static_cast<std::size_t>(j)]);
    }
    return out;
}

}  // namespace featpca
