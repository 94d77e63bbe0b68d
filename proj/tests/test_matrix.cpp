#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "featpca/matrix.hpp"
#include "featpca/report.hpp"
#include "featpca/rng.hpp"

using namespace featpca;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    auto p = fs::temp_directory_path() / "featpca_matrix_tests";
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

}  // namespace

TEST_CASE("load_dense cells in rows") {
    const auto p = tmp_dir() / "dense.tsv";
    write_file(p, "id\tg1\tg2\nc1\t1\t2\nc2\t3\t4\nc3\t5\t6\n");
    const auto m = load_dense(p.string(), Orientation::CellsInRows);
    CHECK(m.n_cells() == 3);
    CHECK(m.n_genes() == 2);
    CHECK(m.values(0, 1) == 2);
    CHECK(m.gene_ids == std::vector<std::string>{"g1", "g2"});
    CHECK(m.cell_ids == std::vector<std::string>{"c1", "c2", "c3"});
}

TEST_CASE("genes-in-rows file is transposed") {
    const auto p = tmp_dir() / "byrow.tsv";
    std::string text = "id\tc1\tc2\tc3\tc4\n";
    for (int g = 0; g < 5; ++g) {
        text += "g" + std::to_string(g);
        for (int c = 0; c < 4; ++c) text += "\t" + std::to_string(g * 4 + c);
        text += "\n";
    }
    write_file(p, text);
    const auto m = load_dense(p.string(), Orientation::GenesInRows);
    CHECK(m.n_cells() == 4);
    CHECK(m.n_genes() == 5);
    CHECK(m.values(2, 3) == 3 * 4 + 2);

    // same file read the other way is the transpose
    const auto t = load_dense(p.string(), Orientation::CellsInRows);
    CHECK(t.values.transpose() == m.values);
}

TEST_CASE("dense parse errors") {
    const auto nan_p = tmp_dir() / "nan.tsv";
    write_file(nan_p, "id\tg1\nc1\t1\nc2\tNaN\n");
    CHECK_THROWS_WITH_AS(load_dense(nan_p.string(), Orientation::CellsInRows),
                         doctest::Contains("line 3"), ValidationError);

    const auto ragged_p = tmp_dir() / "ragged.tsv";
    write_file(ragged_p, "id\tg1\tg2\nc1\t1\t2\nc2\t3\n");
    CHECK_THROWS_WITH_AS(load_dense(ragged_p.string(), Orientation::CellsInRows),
                         doctest::Contains("line 3"), ValidationError);

    const auto dup_p = tmp_dir() / "dup.tsv";
    write_file(dup_p, "id\tg1\tg1\nc1\t1\t2\n");
    CHECK_THROWS_AS(load_dense(dup_p.string(), Orientation::CellsInRows), ValidationError);

    CHECK_THROWS_AS(load_dense((tmp_dir() / "missing.tsv").string(), Orientation::CellsInRows),
                    IoError);
}

TEST_CASE("dense save/load round trip is exact") {
    Rng rng(3);
    ExpressionMatrix m;
    m.values.resize(4, 3);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) m.values(i, j) = rng.next_gaussian() * 1e3;
    m.cell_ids = {"a", "b", "c", "d"};
    m.gene_ids = {"x", "y", "z"};
    const auto p = tmp_dir() / "rt.tsv";
    save_dense(m, p.string());
    const auto back = load_dense(p.string(), Orientation::CellsInRows);
    CHECK(back.values == m.values);
    CHECK(back.gene_ids == m.gene_ids);
    CHECK(back.cell_ids == m.cell_ids);
}

TEST_CASE("matrix market loader") {
    const auto mtx = tmp_dir() / "m.mtx";
    const auto cells = tmp_dir() / "cells.txt";
    const auto genes = tmp_dir() / "genes.txt";
    write_file(cells, "c1\nc2\nc3\n");
    write_file(genes, "g1\ng2\n");

    SUBCASE("entries densify, rest is zero") {
        write_file(mtx, "%%MatrixMarket matrix coordinate real general\n3 2 2\n1 1 5\n3 2 7\n");
        const auto m = load_matrix_market(mtx.string(), cells.string(), genes.string());
        Matrix expect(3, 2);
        expect << 5, 0, 0, 0, 0, 7;
        CHECK(m.values == expect);
        // sum of dense equals sum of triplets
        CHECK(m.values.sum() == 12);
    }
    SUBCASE("empty entry list gives all zeros") {
        write_file(mtx, "3 2 0\n");
        const auto m = load_matrix_market(mtx.string(), cells.string(), genes.string());
        CHECK(m.values.isZero());
        CHECK(m.n_cells() == 3);
        CHECK(m.n_genes() == 2);
    }
    SUBCASE("id file length mismatch") {
        write_file(mtx, "3 2 0\n");
        write_file(cells, "c1\nc2\nc3\nc4\n");
        CHECK_THROWS_AS(load_matrix_market(mtx.string(), cells.string(), genes.string()),
                        ValidationError);
    }
}

TEST_CASE("labels load maps names to dense ids") {
    const auto p = tmp_dir() / "labels.tsv";
    write_file(p, "c1\talpha\nc2\tbeta\nc3\talpha\n");
    const auto l = load_labels(p.string());
    CHECK(l.labels == std::vector<int>{0, 1, 0});
    CHECK(l.class_names == std::vector<std::string>{"alpha", "beta"});
}

TEST_CASE("report round trip") {
    PipelineReport r;
    r.baseline_ari = quantize10(0.123456789012345);
    StrategySeries s;
    s.strategy = Strategy::Shuffled;
    s.series = {{2, quantize10(0.5)}, {3, quantize10(0.7177712345)}};
    s.errors = {{4, "pca_fit needs at least 2 rows"}};
    s.win_count = 1;
    s.trial_count = 3;
    s.mean_ari = quantize10(0.6088856173);
    s.max_ari = quantize10(0.7177712345);
    r.strategies.push_back(s);
    r.config_echo = {{"seed", "42"}, {"k_min", "2"}};

    const auto p = tmp_dir() / "report.json";
    save_report(r, p.string());
    const auto back = load_report(p.string());
    CHECK(back == r);

    SUBCASE("empty sweep serializes") {
        PipelineReport empty;
        const auto ep = tmp_dir() / "empty.json";
        save_report(empty, ep.string());
        CHECK(load_report(ep.string()) == empty);
    }
    SUBCASE("unwritable path") {
        CHECK_THROWS_AS(save_report(r, (tmp_dir() / "nope" / "x.json").string()), IoError);
    }
}
