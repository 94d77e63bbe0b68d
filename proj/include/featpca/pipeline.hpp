#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "featpca/autoencoder.hpp"
#include "featpca/errors.hpp"
#include "featpca/gene_graph.hpp"
#include "featpca/kmeans.hpp"
#include "featpca/matrix.hpp"
#include "featpca/metrics.hpp"
#include "featpca/pca.hpp"
#include "featpca/preprocess.hpp"
#include "featpca/report.hpp"
#include "featpca/subspace.hpp"

namespace featpca {

struct PipelineConfig {
    HvgConfig hvg;
    bool impute_enabled = false;
    AutoencoderConfig autoencoder;
    std::vector<Strategy> strategies = {Strategy::Sequential, Strategy::Shuffled,
                                        Strategy::Random, Strategy::GeneCluster};
    int k_min = 2;
    int k_max = 20;
    double overlap_fraction = 0.25;
    double variance_threshold = 0.95;
    KmeansConfig kmeans_cfg{.n_clusters = 0};  // n_clusters <= 0: take from labels
    int leiden_neighbors = 15;
    double leiden_resolution = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (k_min < 2) throw ValidationError("k_min must be >= 2");
        if (k_max < k_min) throw ValidationError("k_max must be >= k_min");
        if (variance_threshold <= 0 || variance_threshold > 1)
            throw ValidationError("variance_threshold must be in (0, 1]");
        if (overlap_fraction < 0 || overlap_fraction > 1)
            throw ValidationError("overlap_fraction must be in [0, 1]");
    }
};

namespace seeds {

// Child-seed stream ids, derived from the master seed with derive_seed().
// Every randomized stage owns a distinct stream so stages can be re-run
// or reordered without perturbing each other.
constexpr std::uint64_t kAutoencoder = 900;
constexpr std::uint64_t kBaselineKmeans = 901;
constexpr std::uint64_t kLeiden = 902;

inline std::uint64_t trial_subspace(Strategy s, int k) {
    return 1'000'000 + static_cast<std::uint64_t>(s) * 1000 + static_cast<std::uint64_t>(k);
}
inline std::uint64_t trial_kmeans(Strategy s, int k) {
    return 2'000'000 + static_cast<std::uint64_t>(s) * 1000 + static_cast<std::uint64_t>(k);
}

}  // namespace seeds

/// normalize -> HVG -> optional autoencoder imputation.
inline ExpressionMatrix preprocess_pipeline(const ExpressionMatrix& raw,
                                            const PipelineConfig& cfg) {
    ExpressionMatrix m = normalize_log(raw, cfg.hvg.target_sum);
    m = select_hvg(m, cfg.hvg);
    if (cfg.impute_enabled) {
        AutoencoderConfig ae = cfg.autoencoder;
        ae.seed = derive_seed(cfg.seed, seeds::kAutoencoder);
        const AutoencoderModel model = train(m, ae);
        m = impute_zeros(m, model);
    }
    return m;
}

namespace detail {

inline double cluster_and_score(const Matrix& embedding, const LabelSet& truth,
                                const PipelineConfig& cfg, std::uint64_t kmeans_seed) {
    KmeansConfig kc = cfg.kmeans_cfg;
    if (kc.n_clusters <= 0) kc.n_clusters = truth.n_classes();
    kc.seed = kmeans_seed;
    const ClusterAssignment assign = kmeans(embedding, kc);
    return adjusted_rand_index(assign.labels, truth.labels);
}

}  // namespace detail

/// Undivided baseline: whole-matrix PCA at the variance threshold, then
/// K-means, scored by ARI against ground truth. Implemented as the k=1
/// single-partition path so subspacing degenerates to it exactly.
inline double run_baseline(const ExpressionMatrix& m_processed, const LabelSet& truth,
                           const PipelineConfig& cfg) {
    if (static_cast<Eigen::Index>(truth.labels.size()) != m_processed.n_cells())
        throw ValidationError("labels count does not match cell count");
    SubspaceSpec whole;
    whole.strategy = Strategy::Sequential;
    whole.overlap_fraction = 0.0;
    whole.partitions.emplace_back(m_processed.n_genes());
    std::iota(whole.partitions[0].begin(), whole.partitions[0].end(), 0);
    const auto blocks = reduce_subspaces(m_processed, whole, cfg.variance_threshold);
    return detail::cluster_and_score(merge_blocks(blocks), truth, cfg,
                                     derive_seed(cfg.seed, seeds::kBaselineKmeans));
}

/// Full sweep: every enabled strategy at every division count in
/// [k_min, k_max] (gene_cluster runs once; Leiden chooses its own k).
/// A failing trial is recorded and does not abort the sweep.
inline PipelineReport run_sweep(const ExpressionMatrix& m_processed, const LabelSet& truth,
                                const PipelineConfig& cfg) {
    cfg.validate();
    if (static_cast<Eigen::Index>(truth.labels.size()) != m_processed.n_cells())
        throw ValidationError("labels count does not match cell count");
    const int d_prime = static_cast<int>(m_processed.n_genes());

    PipelineReport report;
    const auto t0 = std::chrono::steady_clock::now();
    report.baseline_ari = quantize10(run_baseline(m_processed, truth, cfg));
    const auto t1 = std::chrono::steady_clock::now();
    report.timings_sec.emplace_back(
        "baseline", quantize10(std::chrono::duration<double>(t1 - t0).count()));

    for (Strategy strat : cfg.strategies) {
        StrategySeries out;
        out.strategy = strat;
        const auto ts = std::chrono::steady_clock::now();

        auto run_trial = [&](int k, const SubspaceSpec& spec) {
            const auto blocks = reduce_subspaces(m_processed, spec, cfg.variance_threshold);
            const double ari = detail::cluster_and_score(
                merge_blocks(blocks), truth, cfg,
                derive_seed(cfg.seed, seeds::trial_kmeans(strat, k)));
            out.series.emplace_back(k, quantize10(ari));
        };

        if (strat == Strategy::GeneCluster) {
            ++out.trial_count;
            try {
                const int nn = std::min(cfg.leiden_neighbors, d_prime - 1);
                const GeneGraph g = build_gene_knn_graph(m_processed, nn);
                const CommunityPartition p = leiden_partition(
                    g, cfg.leiden_resolution, derive_seed(cfg.seed, seeds::kLeiden));
                const SubspaceSpec spec = communities_to_subspaces(p);
                run_trial(spec.k(), spec);
            } catch (const std::exception& e) {
                out.errors.emplace_back(0, e.what());
            }
        } else {
            for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
                ++out.trial_count;
                try {
                    SubspaceSpec spec;
                    const std::uint64_t s =
                        derive_seed(cfg.seed, seeds::trial_subspace(strat, k));
                    switch (strat) {
                        case Strategy::Sequential:
                            spec = sequential_subspaces(d_prime, k, cfg.overlap_fraction);
                            break;
                        case Strategy::Shuffled:
                            spec = shuffled_subspaces(d_prime, k, cfg.overlap_fraction, s);
                            break;
                        case Strategy::Random:
                            spec = random_bucket_subspaces(d_prime, k, cfg.overlap_fraction, s);
                            break;
                        default: break;
                    }
                    run_trial(k, spec);
                } catch (const std::exception& e) {
                    out.errors.emplace_back(k, e.what());
                }
            }
        }

        double sum = 0.0;
        for (const auto& [k, ari] : out.series) {
            if (ari > report.baseline_ari) ++out.win_count;
            sum += ari;
            out.max_ari = std::max(out.max_ari, ari);
        }
        out.mean_ari =
            out.series.empty() ? 0.0 : quantize10(sum / static_cast<double>(out.series.size()));
        report.strategies.push_back(std::move(out));

        const auto te = std::chrono::steady_clock::now();
        report.timings_sec.emplace_back(
            strategy_name(strat),
            quantize10(std::chrono::duration<double>(te - ts).count()));
    }
    return report;
}

}  // namespace featpca
