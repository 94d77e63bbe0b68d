#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "featpca/pca.hpp"
#include "featpca/rng.hpp"

using namespace featpca;

namespace {

ExpressionMatrix make(const Matrix& v) {
    ExpressionMatrix m;
    m.values = v;
    for (Eigen::Index i = 0; i < v.rows(); ++i) m.cell_ids.push_back("c" + std::to_string(i));
    for (Eigen::Index j = 0; j < v.cols(); ++j) m.gene_ids.push_back("g" + std::to_string(j));
    return m;
}

Matrix random_matrix(Eigen::Index n, Eigen::Index p, Rng& rng) {
    Matrix m(n, p);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.next_gaussian();
    return m;
}

// Oracle: standardize with its own code, form the covariance explicitly,
// and eigendecompose it directly.
struct OracleEig {
    Eigen::VectorXd eigenvalues;  // descending
    Eigen::MatrixXd eigenvectors;
};

OracleEig oracle_pca(const Matrix& block) {
    const auto n = block.rows();
    Eigen::MatrixXd z(block.rows(), block.cols());
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
        const double mean = block.col(j).mean();
        double var = 0;
        for (Eigen::Index i = 0; i < n; ++i) var += std::pow(block(i, j) - mean, 2);
        var /= static_cast<double>(n);
        const double sd = var > 0 ? std::sqrt(var) : 1.0;
        for (Eigen::Index i = 0; i < n; ++i) z(i, j) = (block(i, j) - mean) / sd;
    }
    Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s(cov);
    OracleEig out;
    out.eigenvalues = s.eigenvalues().reverse();
    out.eigenvectors = s.eigenvectors().rowwise().reverse();
    return out;
}

}  // namespace

TEST_CASE("rank-1 data needs one component") {
    Matrix v(5, 2);
    v << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5;
    const auto model = pca_fit(v, 0.95);
    CHECK(model.n_components() == 1);
    CHECK(model.explained_variance_ratio(0) == doctest::Approx(1.0));
}

TEST_CASE("standardization equalizes axis variances") {
    // axis-aligned, independent features with variances 4 and 1
    Rng rng(17);
    Matrix v(2000, 2);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        v(i, 0) = 2.0 * rng.next_gaussian();
        v(i, 1) = rng.next_gaussian();
    }
    const auto model = pca_fit(v, 0.95);
    CHECK(model.n_components() == 2);
    CHECK(model.explained_variance_ratio(0) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(model.explained_variance_ratio(1) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("matches the covariance eigendecomposition oracle") {
    Rng rng(23);
    for (int t = 0; t < 20; ++t) {
        const auto n = 10 + static_cast<Eigen::Index>(rng.next_below(21));
        const auto p = 2 + static_cast<Eigen::Index>(rng.next_below(9));
        const Matrix v = random_matrix(n, p, rng);
        const auto model = pca_fit(v, 1.0);
        const auto oracle = oracle_pca(v);
        for (Eigen::Index c = 0; c < model.n_components(); ++c) {
            CHECK(model.eigenvalues(c) == doctest::Approx(oracle.eigenvalues(c)).epsilon(1e-8));
            const double align =
                std::abs(model.components.col(c).dot(oracle.eigenvectors.col(c)));
            CHECK(align == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("gram route agrees with the oracle when p > n") {
    Rng rng(29);
    const Matrix v = random_matrix(8, 20, rng);
    const auto model = pca_fit(v, 1.0);
    const auto oracle = oracle_pca(v);
    CHECK(model.n_components() == 7);  // min(n-1, p)
    for (Eigen::Index c = 0; c < model.n_components(); ++c) {
        CHECK(model.eigenvalues(c) == doctest::Approx(oracle.eigenvalues(c)).epsilon(1e-8));
        const double align = std::abs(model.components.col(c).dot(oracle.eigenvectors.col(c)));
        CHECK(align == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("component orthonormality") {
    Rng rng(31);
    const Matrix v = random_matrix(25, 6, rng);
    const auto model = pca_fit(v, 1.0);
    const Matrix gram = model.components.transpose() * model.components;
    CHECK((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("transform identities") {
    Rng rng(37);
    const Matrix v = random_matrix(20, 5, rng);
    const auto model = pca_fit(v, 1.0);
    const Matrix scores = pca_transform(model, v);

    SUBCASE("full-rank reconstruction recovers the standardized data") {
        const Matrix z = (v.rowwise() - model.mean.transpose()).array().rowwise() /
                         model.scale.transpose().array();
        const Matrix recon = scores * model.components.transpose();
        CHECK((recon - z).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("mean row maps to zero") {
        Matrix mean_row = model.mean.transpose();
        const Matrix s = pca_transform(model, mean_row);
        CHECK(s.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("score variances equal the eigenvalues") {
        const auto oracle = oracle_pca(v);
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            const double mean = scores.col(c).mean();
            const double var =
                (scores.col(c).array() - mean).square().sum() / static_cast<double>(v.rows());
            CHECK(var == doctest::Approx(oracle.eigenvalues(c)).epsilon(1e-8));
        }
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(pca_transform(model, Matrix::Zero(3, 4)), ValidationError);
    }
}

TEST_CASE("pca_fit validation") {
    CHECK_THROWS_AS(pca_fit(Matrix::Zero(1, 3), 0.95), ValidationError);
    CHECK_THROWS_AS(pca_fit(Matrix::Zero(5, 3), 0.0), ValidationError);
}

TEST_CASE("single full partition equals whole-matrix pca") {
    Rng rng(41);
    const auto m = make(random_matrix(15, 8, rng));
    SubspaceSpec whole;
    whole.partitions.emplace_back(8);
    std::iota(whole.partitions[0].begin(), whole.partitions[0].end(), 0);
    const auto blocks = reduce_subspaces(m, whole, 0.95);
    REQUIRE(blocks.size() == 1);

    const auto model = pca_fit(m.values, 0.95);
    const Matrix direct = pca_transform(model, m.values);
    CHECK((blocks[0].scores - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disjoint partitions of independent blocks match per-block pca") {
    Rng rng(43);
    const Matrix left = random_matrix(30, 4, rng);
    const Matrix right = random_matrix(30, 3, rng);
    Matrix v(30, 7);
    v << left, right;
    const auto m = make(v);
    SubspaceSpec spec;
    spec.partitions = {{0, 1, 2, 3}, {4, 5, 6}};
    const auto blocks = reduce_subspaces(m, spec, 1.0);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].source_partition == 0);
    CHECK(blocks[1].source_partition == 1);

    const auto ml = pca_fit(left, 1.0);
    const auto mr = pca_fit(right, 1.0);
    CHECK((blocks[0].scores - pca_transform(ml, left)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((blocks[1].scores - pca_transform(mr, right)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("merge_blocks") {
    Rng rng(47);
    EmbeddingBlock a, b, c;
    a.scores = random_matrix(6, 3, rng);
    b.scores = random_matrix(6, 2, rng);
    c.scores = random_matrix(6, 4, rng);

    SUBCASE("single block passthrough") {
        const Matrix out = merge_blocks({a});
        CHECK(out == a.scores);
    }
    SUBCASE("concatenation layout") {
        const Matrix out = merge_blocks({a, b, c});
        CHECK(out.cols() == 9);
        CHECK(out.leftCols(3) == a.scores);
        CHECK(out.middleCols(3, 2) == b.scores);
    }
    SUBCASE("block order preserves pairwise distances") {
        const Matrix x = merge_blocks({a, b, c});
        const Matrix y = merge_blocks({c, a, b});
        for (Eigen::Index i = 0; i < 6; ++i)
            for (Eigen::Index j = i + 1; j < 6; ++j)
                CHECK((x.row(i) - x.row(j)).norm() ==
                      doctest::Approx((y.row(i) - y.row(j)).norm()));
    }
    SUBCASE("mismatched row counts") {
        EmbeddingBlock bad;
        bad.scores = random_matrix(5, 2, rng);
        CHECK_THROWS_AS(merge_blocks({a, bad}), ValidationError);
    }
}
