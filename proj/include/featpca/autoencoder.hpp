#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "featpca/errors.hpp"
#include "featpca/matrix.hpp"
#include "featpca/rng.hpp"

namespace featpca {

struct AutoencoderConfig {
    int bottleneck = 50;
    double noise_mask_prob = 0.1;
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate(Eigen::Index d_prime) const {
        if (bottleneck < 1) throw ValidationError("bottleneck must be >= 1");
        if (bottleneck >= d_prime)
            throw ValidationError("bottleneck must be smaller than the gene count");
        if (noise_mask_prob < 0 || noise_mask_prob >= 1)
            throw ValidationError("noise_mask_prob must be in [0, 1)");
        if (epochs < 1) throw ValidationError("epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
        if (learning_rate <= 0) throw ValidationError("learning_rate must be > 0");
    }
};

/// Single-hidden-layer denoising autoencoder: d' -> tanh bottleneck -> d'
/// with a linear output layer.
struct AutoencoderModel {
    Matrix w1;   // d' x bottleneck
    Vector b1;   // bottleneck
    Matrix w2;   // bottleneck x d'
    Vector b2;   // d'
    std::vector<std::string> gene_ids;
    std::string activation = "tanh";
    double first_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;

    Matrix reconstruct(const Matrix& x) const {
        const Matrix h = ((x * w1).rowwise() + b1.transpose()).array().tanh();
        return (h * w2).rowwise() + b2.transpose();
    }
};

struct AutoencoderGradients {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
};

/// Mean squared reconstruction error over all entries, plus analytic
/// gradients. `input` may be a noise-masked copy of `target`.
inline double loss_and_gradients(const AutoencoderModel& m, const Matrix& input,
                                 const Matrix& target, AutoencoderGradients& grads) {
    const double scale = 1.0 / static_cast<double>(input.rows() * input.cols());
    const Matrix h = ((input * m.w1).rowwise() + m.b1.transpose()).array().tanh();
    const Matrix y = (h * m.w2).rowwise() + m.b2.transpose();
    const Matrix diff = y - target;
    const double loss = diff.array().square().sum() * scale;

    const Matrix dy = 2.0 * scale * diff;
    grads.w2 = h.transpose() * dy;
    grads.b2 = dy.colwise().sum();
    const Matrix dh = (dy * m.w2.transpose()).array() * (1.0 - h.array().square());
    grads.w1 = input.transpose() * dh;
    grads.b1 = dh.colwise().sum();
    return loss;
}

namespace detail {

inline Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.next_double(-limit, limit);
    return m;
}

// Adam moment state for one parameter tensor.
struct AdamState {
    Matrix m, v;
    explicit AdamState(Eigen::Index rows, Eigen::Index cols)
        : m(Matrix::Zero(rows, cols)), v(Matrix::Zero(rows, cols)) {}

    void update(Matrix& param, const Matrix& grad, double lr, long step) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    }
};

}  // namespace detail

/// Trains with seeded minibatch SGD (Adam update rule) on masking noise:
/// each input entry is independently zeroed with cfg.noise_mask_prob and
/// the loss compares the reconstruction against the clean row.
/// Fully deterministic for a fixed config.
inline AutoencoderModel train(const ExpressionMatrix& data, const AutoencoderConfig& cfg) {
    const auto n = data.n_cells();
    const auto d = data.n_genes();
    cfg.validate(d);
    if (n < 2) throw ValidationError("autoencoder training needs at least 2 cells");

    Rng rng(cfg.seed);
    AutoencoderModel model;
    model.gene_ids = data.gene_ids;
    model.w1 = detail::glorot_uniform(d, cfg.bottleneck, rng);
    model.b1 = Vector::Zero(cfg.bottleneck);
    model.w2 = detail::glorot_uniform(cfg.bottleneck, d, rng);
    model.b2 = Vector::Zero(d);

    detail::AdamState s_w1(d, cfg.bottleneck), s_b1(cfg.bottleneck, 1);
    detail::AdamState s_w2(cfg.bottleneck, d), s_b2(d, 1);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    AutoencoderGradients grads;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        long n_batches = 0;
        for (Eigen::Index at = 0; at < n; at += cfg.batch_size) {
            const auto bs = std::min<Eigen::Index>(cfg.batch_size, n - at);
            Matrix clean(bs, d);
            for (Eigen::Index r = 0; r < bs; ++r)
                clean.row(r) = data.values.row(order[static_cast<std::size_t>(at + r)]);
            Matrix noisy = clean;
            if (cfg.noise_mask_prob > 0) {
                for (Eigen::Index i = 0; i < bs; ++i)
                    for (Eigen::Index j = 0; j < d; ++j)
                        if (rng.next_double() < cfg.noise_mask_prob) noisy(i, j) = 0.0;
            }

            const double loss = loss_and_gradients(model, noisy, clean, grads);
            if (!std::isfinite(loss))
                throw NumericalError(
                    "training loss diverged; try a smaller learning rate");
            epoch_loss += loss;
            ++n_batches;

            ++step;
            s_w1.update(model.w1, grads.w1, cfg.learning_rate, step);
            s_w2.update(model.w2, grads.w2, cfg.learning_rate, step);
            Matrix b1m = model.b1, b2m = model.b2;
            s_b1.update(b1m, grads.b1, cfg.learning_rate, step);
            s_b2.update(b2m, grads.b2, cfg.learning_rate, step);
            model.b1 = b1m;
            model.b2 = b2m;
        }
        epoch_loss /= static_cast<double>(n_batches);
        if (epoch == 0) model.first_epoch_loss = epoch_loss;
        model.final_epoch_loss = epoch_loss;
    }
    return model;
}

/// Replaces zero entries with the clamped model reconstruction; nonzero
/// entries pass through bit-identically.
inline ExpressionMatrix impute_zeros(const ExpressionMatrix& m, const AutoencoderModel& model) {
    if (m.gene_ids != model.gene_ids)
        throw ValidationError("impute_zeros: gene set does not match the trained model");
    const Matrix recon = model.reconstruct(m.values);
    ExpressionMatrix out = m;
    for (Eigen::Index i = 0; i < m.n_cells(); ++i)
        for (Eigen::Index j = 0; j < m.n_genes(); ++j)
            if (m.values(i, j) == 0.0) out.values(i, j) = std::max(recon(i, j), 0.0);
    return out;
}

/// Checkpoint format: text header (dims, activation, gene ids) followed
/// by hexfloat weights, which round-trip doubles exactly.
inline void save_model(const AutoencoderModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "featpca-autoencoder 1\n";
    out << m.w1.rows() << ' ' << m.w1.cols() << ' ' << m.activation << '\n';
    out << m.gene_ids.size() << '\n';
    for (const auto& g : m.gene_ids) out << g << '\n';
    char buf[64];
    auto dump = [&](const double* p, Eigen::Index count) {
        for (Eigen::Index i = 0; i < count; ++i) {
            std::snprintf(buf, sizeof(buf), "%a\n", p[i]);
            out << buf;
        }
    };
    dump(m.w1.data(), m.w1.size());
    dump(m.b1.data(), m.b1.size());
    dump(m.w2.data(), m.w2.size());
    dump(m.b2.data(), m.b2.size());
    if (!out) throw IoError("write failed: " + path);
}

inline AutoencoderModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "featpca-autoencoder" || version != 1)
        throw ValidationError("not a featpca autoencoder checkpoint: " + path);
    Eigen::Index d = 0, b = 0;
    AutoencoderModel m;
    in >> d >> b >> m.activation;
    std::size_t n_ids = 0;
    in >> n_ids;
    std::string line;
    std::getline(in, line);
    m.gene_ids.resize(n_ids);
    for (auto& g : m.gene_ids) {
        if (!std::getline(in, g)) throw ValidationError("truncated checkpoint: " + path);
    }
    if (static_cast<Eigen::Index>(n_ids) != d)
        throw ValidationError("checkpoint gene count mismatch");
    m.w1.resize(d, b);
    m.b1.resize(b);
    m.w2.resize(b, d);
    m.b2.resize(d);
    // istream double extraction does not accept hexfloat; go through strtod.
    auto slurp = [&](double* p, Eigen::Index count) {
        std::string tok;
        for (Eigen::Index i = 0; i < count; ++i) {
            if (!(in >> tok)) throw ValidationError("truncated checkpoint: " + path);
            p[i] = std::strtod(tok.c_str(), nullptr);
        }
    };
    slurp(m.w1.data(), m.w1.size());
    slurp(m.b1.data(), m.b1.size());
    slurp(m.w2.data(), m.w2.size());
    slurp(m.b2.data(), m.b2.size());
    return m;
}

}  // namespace featpca
