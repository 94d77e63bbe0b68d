#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "featpca/matrix.hpp"
#include "featpca/rng.hpp"

namespace featpca {

/// Seeded Gaussian-mixture toy dataset: each cluster owns a disjoint
/// block of informative genes with elevated expression in its cells; the
/// remaining genes are pure noise. Dropout zeroes entries at random,
/// mimicking scRNA-seq sparsity.
struct SynthConfig {
    int n_cells = 300;
    int n_genes = 2000;
    int n_clusters = 5;
    int informative_per_cluster = 40;
    double signal = 3.0;       // mean shift of informative genes
    double baseline = 0.8;     // mean of background expression
    double noise_sd = 1.0;
    double dropout_prob = 0.3;
    std::uint64_t seed = 0;
};

struct SynthDataset {
    ExpressionMatrix matrix;
    LabelSet labels;
};

inline SynthDataset make_synthetic(const SynthConfig& cfg) {
    Rng rng(cfg.seed);
    SynthDataset out;

    std::vector<int> labels(static_cast<std::size_t>(cfg.n_cells));
    for (int i = 0; i < cfg.n_cells; ++i)
        labels[static_cast<std::size_t>(i)] = i % cfg.n_clusters;
    rng.shuffle(labels);

    Matrix v(cfg.n_cells, cfg.n_genes);
    for (int i = 0; i < cfg.n_cells; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        const int block_lo = c * cfg.informative_per_cluster;
        const int block_hi = block_lo + cfg.informative_per_cluster;
        for (int j = 0; j < cfg.n_genes; ++j) {
            const double mu =
                (j >= block_lo && j < block_hi) ? cfg.baseline + cfg.signal : cfg.baseline;
            double x = mu + cfg.noise_sd * rng.next_gaussian();
            if (x < 0) x = 0;
            if (rng.next_double() < cfg.dropout_prob) x = 0;
            v(i, j) = x;
        }
    }

    out.matrix.values = std::move(v);
    out.matrix.cell_ids.reserve(static_cast<std::size_t>(cfg.n_cells));
    for (int i = 0; i < cfg.n_cells; ++i)
        out.matrix.cell_ids.push_back("cell_" + std::to_string(i));
    out.matrix.gene_ids.reserve(static_cast<std::size_t>(cfg.n_genes));
    for (int j = 0; j < cfg.n_genes; ++j)
        out.matrix.gene_ids.push_back("gene_" + std::to_string(j));
    out.labels.labels = std::move(labels);
    return out;
}

}  // namespace featpca
