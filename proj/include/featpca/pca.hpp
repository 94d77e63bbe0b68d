#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "featpca/errors.hpp"
#include "featpca/matrix.hpp"
#include "featpca/subspace.hpp"

namespace featpca {

/// Fitted PCA on a standardized feature block. Columns of `components`
/// are orthonormal principal axes, sorted by descending eigenvalue.
struct PcaModel {
    Vector mean;                       // length p
    Vector scale;                      // length p, constant features get 1
    Matrix components;                 // p x m
    Vector eigenvalues;                // length m
    Vector explained_variance_ratio;   // length m
    double retained_variance = 0.0;    // cumulative ratio of the m kept axes

    Eigen::Index n_features() const { return mean.size(); }
    Eigen::Index n_components() const { return components.cols(); }
};

/// Per-subspace PCA scores plus provenance.
struct EmbeddingBlock {
    Matrix scores;  // n x m
    int source_partition = 0;
    double retained_variance = 0.0;
};

namespace detail {

inline Matrix standardize(const Matrix& block, Vector& mean, Vector& scale) {
    const auto n = block.rows();
    mean = block.colwise().mean();
    Matrix centered = block.rowwise() - mean.transpose();
    // Population (1/n) variance; constant columns get scale 1 so they
    // contribute exactly zero variance instead of dividing by zero.
    scale = (centered.array().square().colwise().sum() / static_cast<double>(n)).sqrt();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
        if (scale(j) == 0.0) scale(j) = 1.0;
    return centered.array().rowwise() / scale.transpose().array();
}

// Deterministic sign: each component's largest-magnitude entry is positive.
inline void fix_signs(Matrix& components) {
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
        Eigen::Index imax = 0;
        components.col(c).cwiseAbs().maxCoeff(&imax);
        if (components(imax, c) < 0) components.col(c) = -components.col(c);
    }
}

}  // namespace detail

/// Standardize, eigendecompose the covariance, keep the smallest leading
/// set of axes whose cumulative explained-variance ratio reaches
/// `variance_threshold`, capped at min(n-1, p). When p > n the
/// decomposition runs on the n x n Gram matrix instead of the p x p
/// covariance; the two routes agree on the retained eigenpairs.
inline PcaModel pca_fit(const Matrix& block, double variance_threshold = 0.95) {
    const auto n = block.rows();
    const auto p = block.cols();
    if (n < 2) throw ValidationError("pca_fit needs at least 2 rows");
    if (p < 1) throw ValidationError("pca_fit needs at least 1 column");
    if (variance_threshold <= 0.0 || variance_threshold > 1.0)
        throw ValidationError("variance_threshold must be in (0, 1]");

    PcaModel model;
    const Matrix z = detail::standardize(block, model.mean, model.scale);

    const auto max_rank = std::min<Eigen::Index>(n - 1, p);
    Vector evals;       // descending
    Matrix evecs;       // p x max_rank
    if (p <= n) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
            Eigen::MatrixXd(z.transpose() * z) / static_cast<double>(n));
        if (solver.info() != Eigen::Success)
            throw NumericalError("covariance eigendecomposition failed");
        evals = solver.eigenvalues().reverse();
        evecs = solver.eigenvectors().rowwise().reverse();
    } else {
        // Gram trick: eigenvectors of (1/n) Z Z^T lift to covariance
        // eigenvectors v = Z^T u / sqrt(n * lambda).
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
            Eigen::MatrixXd(z * z.transpose()) / static_cast<double>(n));
        if (solver.info() != Eigen::Success)
            throw NumericalError("gram eigendecomposition failed");
        const Vector gl = solver.eigenvalues().reverse();
        const Matrix gu = solver.eigenvectors().rowwise().reverse();
        evals = gl.head(max_rank);
        evecs.resize(p, max_rank);
        for (Eigen::Index c = 0; c < max_rank; ++c) {
            const double lam = std::max(gl(c), 0.0);
            if (lam > 0)
                evecs.col(c) = z.transpose() * gu.col(c) / std::sqrt(lam * static_cast<double>(n));
            else
                evecs.col(c).setZero();
        }
    }

    const double total = std::max(evals.array().max(0.0).sum(), 0.0);
    Eigen::Index m = max_rank;
    double cum = 0.0;
    if (total > 0) {
        for (Eigen::Index c = 0; c < max_rank; ++c) {
            cum += std::max(evals(c), 0.0) / total;
            if (cum >= variance_threshold) {
                m = c + 1;
                break;
            }
        }
    } else {
        m = 1;  // degenerate all-constant block
    }

    model.eigenvalues = evals.head(m);
    model.components = evecs.leftCols(m);
    detail::fix_signs(model.components);
    model.explained_variance_ratio.resize(m);
    for (Eigen::Index c = 0; c < m; ++c)
        model.explained_variance_ratio(c) =
            total > 0 ? std::max(evals(c), 0.0) / total : 0.0;
    model.retained_variance = model.explained_variance_ratio.sum();
    return model;
}

inline Matrix pca_transform(const PcaModel& model, const Matrix& block) {
    if (block.cols() != model.n_features())
        throw ValidationError("pca_transform: block has " + std::to_string(block.cols()) +
                              " columns, model expects " + std::to_string(model.n_features()));
    const Matrix z = (block.rowwise() - model.mean.transpose()).array().rowwise() /
                     model.scale.transpose().array();
    return z * model.components;
}

/// Fits PCA independently on each partition's columns and returns the
/// blocks in partition order.
inline std::vector<EmbeddingBlock> reduce_subspaces(const ExpressionMatrix& m,
                                                    const SubspaceSpec& spec,
                                                    double variance_threshold = 0.95) {
    spec.validate(static_cast<int>(m.n_genes()));
    std::vector<EmbeddingBlock> blocks;
    blocks.reserve(spec.partitions.size());
    for (std::size_t pi = 0; pi < spec.partitions.size(); ++pi) {
        const auto& part = spec.partitions[pi];
        Matrix sub(m.n_cells(), static_cast<Eigen::Index>(part.size()));
        for (std::size_t j = 0; j < part.size(); ++j)
            sub.col(static_cast<Eigen::Index>(j)) = m.values.col(part[j]);
        const PcaModel model = pca_fit(sub, variance_threshold);
        EmbeddingBlock b;
        b.scores = pca_transform(model, sub);
        b.source_partition = static_cast<int>(pi);
        b.retained_variance = model.retained_variance;
        blocks.push_back(std::move(b));
    }
    return blocks;
}

/// Horizontal concatenation of score blocks along the feature axis.
inline Matrix merge_blocks(const std::vector<EmbeddingBlock>& blocks) {
    if (blocks.empty()) throw ValidationError("merge_blocks: no blocks");
    const auto n = blocks.front().scores.rows();
    Eigen::Index total = 0;
    for (const auto& b : blocks) {
        if (b.scores.rows() != n)
            throw ValidationError("merge_blocks: row-count mismatch across blocks");
        total += b.scores.cols();
    }
    Matrix out(n, total);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        out.middleCols(at, b.scores.cols()) = b.scores;
        at += b.scores.cols();
    }
    return out;
}

}  // namespace featpca
