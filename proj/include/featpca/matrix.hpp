#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "featpca/errors.hpp"

namespace featpca {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Orientation { CellsInRows, GenesInRows };

/// Dense cells x genes expression matrix with identifiers. Immutable by
/// convention after construction; transforms return new instances.
struct ExpressionMatrix {
    Matrix values;  // n cells x d genes
    std::vector<std::string> cell_ids;
    std::vector<std::string> gene_ids;

    Eigen::Index n_cells() const { return values.rows(); }
    Eigen::Index n_genes() const { return values.cols(); }

    void validate() const {
        if (values.rows() != static_cast<Eigen::Index>(cell_ids.size()))
            throw ValidationError("cell_ids length does not match row count");
        if (values.cols() != static_cast<Eigen::Index>(gene_ids.size()))
            throw ValidationError("gene_ids length does not match column count");
        check_unique(cell_ids, "cell");
        check_unique(gene_ids, "gene");
        if (!values.allFinite())
            throw ValidationError("expression matrix contains non-finite values");
    }

private:
    static void check_unique(const std::vector<std::string>& ids, const char* kind) {
        std::unordered_set<std::string> seen;
        for (const auto& id : ids) {
            if (!seen.insert(id).second)
                throw ValidationError(std::string("duplicate ") + kind + " id: " + id);
        }
    }
};

/// Per-cell integer labels in [0, C), e.g. ground-truth cell types.
struct LabelSet {
    std::vector<int> labels;
    std::vector<std::string> class_names;  // optional, size C or empty

    int n_classes() const {
        int c = 0;
        for (int l : labels) c = std::max(c, l + 1);
        return c;
    }

    void validate() const {
        const int c = n_classes();
        std::vector<char> seen(static_cast<std::size_t>(c), 0);
        for (int l : labels) {
            if (l < 0) throw ValidationError("negative label");
            seen[static_cast<std::size_t>(l)] = 1;
        }
        for (int i = 0; i < c; ++i)
            if (!seen[static_cast<std::size_t>(i)])
                throw ValidationError("label " + std::to_string(i) + " never appears");
    }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

inline double parse_value(const std::string& s, std::size_t line_no) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ValidationError("non-numeric value '" + s + "' at line " + std::to_string(line_no));
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size())
        throw ValidationError("non-numeric value '" + s + "' at line " + std::to_string(line_no));
    if (!std::isfinite(v))
        throw ValidationError("non-finite value '" + s + "' at line " + std::to_string(line_no));
    return v;
}

inline std::string trim_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

/// Reads a delimited text matrix. First row holds column identifiers
/// (its leading field, naming the id column, is ignored), first column
/// holds row identifiers. The orientation flag says whether rows are
/// cells or genes; output is always cells x genes.
inline ExpressionMatrix load_dense(const std::string& path, Orientation orientation,
                                   char delimiter = '\t') {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty file: " + path);
    auto header = detail::split_line(detail::trim_cr(line), delimiter);
    if (header.size() < 2) throw ValidationError("header row has fewer than 2 fields: " + path);

    std::vector<std::string> col_ids(header.begin() + 1, header.end());
    std::vector<std::string> row_ids;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_line(line, delimiter);
        if (fields.size() != col_ids.size() + 1)
            throw ValidationError("ragged row at line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(col_ids.size() + 1) + " fields, got " +
                                  std::to_string(fields.size()));
        row_ids.push_back(fields[0]);
        std::vector<double> vals(col_ids.size());
        for (std::size_t j = 0; j < col_ids.size(); ++j)
            vals[j] = detail::parse_value(fields[j + 1], line_no);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw ValidationError("no data rows in " + path);

    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(col_ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < col_ids.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];

    ExpressionMatrix out;
    if (orientation == Orientation::CellsInRows) {
        out.values = std::move(m);
        out.cell_ids = std::move(row_ids);
        out.gene_ids = std::move(col_ids);
    } else {
        out.values = m.transpose();
        out.cell_ids = std::move(col_ids);
        out.gene_ids = std::move(row_ids);
    }
    out.validate();
    return out;
}

/// Writes the matrix in the same dense text layout load_dense reads
/// (cells in rows). Values use max_digits10 so a round trip is exact.
inline void save_dense(const ExpressionMatrix& m, const std::string& path,
                       char delimiter = '\t') {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "cell_id";
    for (const auto& g : m.gene_ids) out << delimiter << g;
    out << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < m.n_cells(); ++i) {
        out << m.cell_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.n_genes(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m.values(i, j));
            out << delimiter << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace detail {

inline std::vector<std::string> read_id_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        line = trim_cr(line);
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

}  // namespace detail

/// Reads a MatrixMarket coordinate file (1-indexed, rows = cells) plus
/// sidecar newline-delimited id files, densifying absent entries to 0.
inline ExpressionMatrix load_matrix_market(const std::string& path,
                                           const std::string& cell_ids_path,
                                           const std::string& gene_ids_path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    // Skip banner and comments.
    do {
        if (!std::getline(in, line)) throw ValidationError("no dimension header in " + path);
        ++line_no;
        line = detail::trim_cr(line);
    } while (line.empty() || line[0] == '%');

    std::istringstream hdr(line);
    long n = 0, d = 0, nnz = 0;
    if (!(hdr >> n >> d >> nnz) || n <= 0 || d <= 0 || nnz < 0)
        throw ValidationError("bad dimension header at line " + std::to_string(line_no));

    auto cell_ids = detail::read_id_lines(cell_ids_path);
    auto gene_ids = detail::read_id_lines(gene_ids_path);
    if (static_cast<long>(cell_ids.size()) != n)
        throw ValidationError("cell id file has " + std::to_string(cell_ids.size()) +
                              " lines, header says " + std::to_string(n));
    if (static_cast<long>(gene_ids.size()) != d)
        throw ValidationError("gene id file has " + std::to_string(gene_ids.size()) +
                              " lines, header says " + std::to_string(d));

    ExpressionMatrix out;
    out.values = Matrix::Zero(n, d);
    out.cell_ids = std::move(cell_ids);
    out.gene_ids = std::move(gene_ids);

    long seen = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim_cr(line);
        if (line.empty() || line[0] == '%') continue;
        std::istringstream es(line);
        long i = 0, j = 0;
        double v = 0.0;
        if (!(es >> i >> j >> v))
            throw ValidationError("bad entry at line " + std::to_string(line_no));
        if (i < 1 || i > n || j < 1 || j > d)
            throw ValidationError("entry index out of range at line " + std::to_string(line_no));
        if (!std::isfinite(v))
            throw ValidationError("non-finite value at line " + std::to_string(line_no));
        out.values(i - 1, j - 1) = v;
        ++seen;
    }
    if (seen != nnz)
        throw ValidationError("header declares " + std::to_string(nnz) + " entries, found " +
                              std::to_string(seen));
    out.validate();
    return out;
}

/// Labels file: two delimited columns (cell_id, label), no header.
/// Labels may be arbitrary strings; they are mapped to dense integers
/// in order of first appearance.
inline LabelSet load_labels(const std::string& path, char delimiter = '\t') {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    LabelSet out;
    std::vector<std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_line(line, delimiter);
        if (fields.size() != 2)
            throw ValidationError("labels line " + std::to_string(line_no) +
                                  ": expected 2 fields, got " + std::to_string(fields.size()));
        const std::string& name = fields[1];
        auto it = std::find(names.begin(), names.end(), name);
        int id;
        if (it == names.end()) {
            id = static_cast<int>(names.size());
            names.push_back(name);
        } else {
            id = static_cast<int>(it - names.begin());
        }
        out.labels.push_back(id);
    }
    out.class_names = std::move(names);
    out.validate();
    return out;
}

inline void save_labels(const std::vector<std::string>& cell_ids,
                        const std::vector<int>& labels, const std::string& path,
                        char delimiter = '\t') {
    if (cell_ids.size() != labels.size())
        throw ValidationError("cell id / label count mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << cell_ids[i] << delimiter << labels[i] << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace featpca
