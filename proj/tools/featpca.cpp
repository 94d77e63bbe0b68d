// featpca command-line tool: each subcommand runs one pipeline stage and
// communicates through the delimited-text / JSON interchange formats, so
// stages can be tested and rerun independently. `sweep` runs everything.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "featpca/featpca.hpp"

namespace fp = featpca;

namespace {

struct IoOptions {
    std::string input;
    std::string mtx;
    std::string mtx_cell_ids;
    std::string mtx_gene_ids;
    std::string orientation = "cells";
    std::string delimiter = "tab";
};

char parse_delimiter(const std::string& d) {
    if (d == "tab" || d == "\\t") return '\t';
    if (d == "comma") return ',';
    if (d == "space") return ' ';
    if (d.size() == 1) return d[0];
    throw fp::ValidationError("unrecognized delimiter: " + d);
}

void add_input_options(CLI::App* cmd, IoOptions& io) {
    cmd->add_option("--input", io.input, "Dense delimited matrix file");
    cmd->add_option("--mtx", io.mtx, "MatrixMarket coordinate file (cells x genes)");
    cmd->add_option("--mtx-cell-ids", io.mtx_cell_ids, "Cell id sidecar for --mtx");
    cmd->add_option("--mtx-gene-ids", io.mtx_gene_ids, "Gene id sidecar for --mtx");
    cmd->add_option("--orientation", io.orientation,
                    "Dense file orientation: cells|genes in rows")
        ->check(CLI::IsMember({"cells", "genes"}));
    cmd->add_option("--delimiter", io.delimiter, "Field delimiter: tab|comma|space|<char>");
}

fp::ExpressionMatrix load_input(const IoOptions& io) {
    if (!io.mtx.empty()) {
        if (io.mtx_cell_ids.empty() || io.mtx_gene_ids.empty())
            throw fp::ValidationError("--mtx requires --mtx-cell-ids and --mtx-gene-ids");
        return fp::load_matrix_market(io.mtx, io.mtx_cell_ids, io.mtx_gene_ids);
    }
    if (io.input.empty()) throw fp::ValidationError("no input given (--input or --mtx)");
    return fp::load_dense(io.input,
                          io.orientation == "cells" ? fp::Orientation::CellsInRows
                                                    : fp::Orientation::GenesInRows,
                          parse_delimiter(io.delimiter));
}

void save_subspace_spec(const fp::SubspaceSpec& spec, const std::string& path) {
    nlohmann::ordered_json j;
    j["strategy"] = fp::strategy_name(spec.strategy);
    j["overlap_fraction"] = spec.overlap_fraction;
    j["seed"] = spec.seed;
    j["k"] = spec.k();
    std::vector<std::size_t> sizes;
    for (const auto& p : spec.partitions) sizes.push_back(p.size());
    j["partition_sizes"] = sizes;
    j["partitions"] = spec.partitions;
    std::ofstream out(path);
    if (!out) throw fp::IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

fp::SubspaceSpec load_subspace_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fp::IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw fp::ValidationError(std::string("bad subspace spec: ") + e.what());
    }
    fp::SubspaceSpec spec;
    spec.strategy = fp::strategy_from_name(j.at("strategy").get<std::string>());
    spec.overlap_fraction = j.at("overlap_fraction").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.partitions = j.at("partitions").get<std::vector<std::vector<int>>>();
    return spec;
}

void save_embedding(const fp::Matrix& emb, const std::vector<std::string>& cell_ids,
                    const std::vector<Eigen::Index>& block_widths, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw fp::IoError("cannot write " + path);
    out << "# blocks";
    for (auto w : block_widths) out << '\t' << w;
    out << '\n';
    out << "cell_id";
    for (Eigen::Index j = 0; j < emb.cols(); ++j) out << "\tpc_" << j;
    out << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < emb.rows(); ++i) {
        out << cell_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < emb.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", emb(i, j));
            out << '\t' << buf;
        }
        out << '\n';
    }
    if (!out) throw fp::IoError("write failed: " + path);
}

std::pair<fp::Matrix, std::vector<std::string>> load_embedding(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fp::IoError("cannot open " + path);
    std::string line;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    bool header_seen = false;
    std::size_t width = 0, line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string id, tok;
        std::getline(ss, id, '\t');
        std::vector<double> vals;
        while (std::getline(ss, tok, '\t'))
            vals.push_back(std::strtod(tok.c_str(), nullptr));
        if (width == 0) width = vals.size();
        if (vals.size() != width)
            throw fp::ValidationError("ragged embedding row at line " + std::to_string(line_no));
        ids.push_back(id);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw fp::ValidationError("empty embedding file: " + path);
    fp::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return {std::move(m), std::move(ids)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FeatPCA: feature-subspace PCA pipeline for scRNA-seq clustering"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate the bundled synthetic toy dataset");
    fp::SynthConfig synth_cfg;
    std::string synth_out = "synthetic.tsv", synth_labels_out = "synthetic_labels.tsv";
    synth->add_option("--cells", synth_cfg.n_cells, "Number of cells");
    synth->add_option("--genes", synth_cfg.n_genes, "Number of genes");
    synth->add_option("--clusters", synth_cfg.n_clusters, "Number of cell clusters");
    synth->add_option("--informative", synth_cfg.informative_per_cluster,
                      "Informative genes per cluster");
    synth->add_option("--signal", synth_cfg.signal, "Mean shift of informative genes");
    synth->add_option("--dropout", synth_cfg.dropout_prob, "Dropout probability");
    synth->add_option("--seed", synth_cfg.seed, "RNG seed");
    synth->add_option("--out", synth_out, "Output matrix path");
    synth->add_option("--labels-out", synth_labels_out, "Output labels path");

    // ---- preprocess ----
    auto* prep = app.add_subcommand("preprocess", "Log-normalize and select HVGs");
    IoOptions prep_io;
    add_input_options(prep, prep_io);
    fp::HvgConfig hvg_cfg;
    std::string prep_out = "hvg.tsv";
    prep->add_option("--target-sum", hvg_cfg.target_sum, "Per-cell total after scaling");
    prep->add_option("--n-top-genes", hvg_cfg.n_top_genes, "Genes to keep");
    prep->add_option("--n-bins", hvg_cfg.n_bins, "Mean bins for dispersion z-scoring");
    prep->add_option("--output", prep_out, "Output matrix path");

    // ---- impute ----
    auto* imp = app.add_subcommand("impute", "Denoising-autoencoder zero imputation");
    IoOptions imp_io;
    add_input_options(imp, imp_io);
    fp::AutoencoderConfig ae_cfg;
    std::string imp_out = "imputed.tsv", model_out, model_in;
    imp->add_option("--bottleneck", ae_cfg.bottleneck, "Bottleneck width");
    imp->add_option("--noise", ae_cfg.noise_mask_prob, "Masking-noise probability");
    imp->add_option("--epochs", ae_cfg.epochs, "Training epochs");
    imp->add_option("--batch-size", ae_cfg.batch_size, "Minibatch size");
    imp->add_option("--learning-rate", ae_cfg.learning_rate, "Adam learning rate");
    imp->add_option("--seed", ae_cfg.seed, "RNG seed");
    imp->add_option("--output", imp_out, "Output matrix path");
    imp->add_option("--model-out", model_out, "Optional checkpoint to write");
    imp->add_option("--model-in", model_in, "Skip training, impute with this checkpoint");

    // ---- subspace ----
    auto* sub = app.add_subcommand("subspace", "Generate a gene-index subspace spec");
    IoOptions sub_io;
    add_input_options(sub, sub_io);
    std::string sub_strategy = "sequential", sub_out = "subspaces.json";
    int sub_d_prime = 0, sub_k = 2, sub_neighbors = 15;
    double sub_overlap = 0.25, sub_resolution = 1.0;
    std::uint64_t sub_seed = 0;
    sub->add_option("--strategy", sub_strategy, "sequential|shuffled|random|gene_cluster")
        ->check(CLI::IsMember({"sequential", "shuffled", "random", "gene_cluster"}));
    sub->add_option("--d-prime", sub_d_prime, "Gene count (strategies 1-3; else from --input)");
    sub->add_option("--k", sub_k, "Number of divisions");
    sub->add_option("--overlap", sub_overlap, "Overlap fraction");
    sub->add_option("--neighbors", sub_neighbors, "kNN neighbors (gene_cluster)");
    sub->add_option("--resolution", sub_resolution, "Leiden resolution (gene_cluster)");
    sub->add_option("--seed", sub_seed, "RNG seed");
    sub->add_option("--output", sub_out, "Output spec path");

    // ---- reduce ----
    auto* red = app.add_subcommand("reduce", "Per-subspace PCA and merge");
    IoOptions red_io;
    add_input_options(red, red_io);
    std::string red_spec = "subspaces.json", red_out = "embedding.tsv";
    double red_threshold = 0.95;
    red->add_option("--spec", red_spec, "Subspace spec file");
    red->add_option("--variance-threshold", red_threshold, "Retained-variance threshold");
    red->add_option("--output", red_out, "Output embedding path");

    // ---- cluster ----
    auto* clu = app.add_subcommand("cluster", "K-means on an embedding");
    std::string clu_in = "embedding.tsv", clu_out = "clusters.tsv";
    fp::KmeansConfig km_cfg;
    clu->add_option("--input", clu_in, "Embedding file from `reduce`");
    clu->add_option("--clusters", km_cfg.n_clusters, "Number of clusters")->required();
    clu->add_option("--n-init", km_cfg.n_init, "Restarts");
    clu->add_option("--max-iter", km_cfg.max_iter, "Max Lloyd iterations");
    clu->add_option("--tol", km_cfg.tol, "Center-shift tolerance");
    clu->add_option("--seed", km_cfg.seed, "RNG seed");
    clu->add_option("--output", clu_out, "Output labels path");

    // ---- sweep ----
    auto* swp = app.add_subcommand("sweep", "Full pipeline sweep over strategies and k");
    std::string swp_config_help;  // real handling is pre-parse, see below
    swp->add_option("--config", swp_config_help, "Flat key=value config file; flags override");
    IoOptions swp_io;
    add_input_options(swp, swp_io);
    fp::PipelineConfig pipe_cfg;
    std::string swp_labels, swp_out_dir = ".";
    std::vector<std::string> swp_strategies = {"sequential", "shuffled", "random",
                                               "gene_cluster"};
    bool swp_impute = false;
    swp->add_option("--labels", swp_labels, "Ground-truth labels file")->required();
    swp->add_option("--target-sum", pipe_cfg.hvg.target_sum, "Per-cell total after scaling");
    swp->add_option("--n-top-genes", pipe_cfg.hvg.n_top_genes, "HVGs to keep");
    swp->add_option("--n-bins", pipe_cfg.hvg.n_bins, "HVG mean bins");
    swp->add_flag("--impute", swp_impute, "Enable autoencoder imputation");
    swp->add_option("--bottleneck", pipe_cfg.autoencoder.bottleneck, "Autoencoder bottleneck");
    swp->add_option("--noise", pipe_cfg.autoencoder.noise_mask_prob, "Masking-noise prob");
    swp->add_option("--epochs", pipe_cfg.autoencoder.epochs, "Autoencoder epochs");
    swp->add_option("--batch-size", pipe_cfg.autoencoder.batch_size, "Autoencoder batch size");
    swp->add_option("--learning-rate", pipe_cfg.autoencoder.learning_rate, "Adam step size");
    swp->add_option("--strategies", swp_strategies, "Strategies to sweep")->delimiter(',');
    swp->add_option("--k-min", pipe_cfg.k_min, "Smallest division count");
    swp->add_option("--k-max", pipe_cfg.k_max, "Largest division count");
    swp->add_option("--overlap", pipe_cfg.overlap_fraction, "Overlap fraction");
    swp->add_option("--variance-threshold", pipe_cfg.variance_threshold,
                    "PCA retained-variance threshold");
    swp->add_option("--clusters", pipe_cfg.kmeans_cfg.n_clusters,
                    "K-means clusters (default: ground-truth count)");
    swp->add_option("--n-init", pipe_cfg.kmeans_cfg.n_init, "K-means restarts");
    swp->add_option("--max-iter", pipe_cfg.kmeans_cfg.max_iter, "K-means max iterations");
    swp->add_option("--tol", pipe_cfg.kmeans_cfg.tol, "K-means tolerance");
    swp->add_option("--neighbors", pipe_cfg.leiden_neighbors, "Gene-graph kNN neighbors");
    swp->add_option("--resolution", pipe_cfg.leiden_resolution, "Leiden resolution");
    swp->add_option("--seed", pipe_cfg.seed, "Master seed for all randomized stages");
    swp->add_option("--out-dir", swp_out_dir, "Directory for report.json / plot_data.tsv");

    // ---- report ----
    auto* rep = app.add_subcommand("report", "Summarize a saved report");
    std::string rep_in = "report.json", rep_plot;
    rep->add_option("--report", rep_in, "Report file");
    rep->add_option("--plot-out", rep_plot, "Re-emit plot data to this path");

    try {
        // Flat key=value config support for `sweep`. CLI11's own config
        // handling does not run for subcommands, so the file is expanded
        // into --key=value tokens ahead of the user's flags; TakeLast
        // makes explicit flags override config values.
        std::vector<std::string> args(argv + 1, argv + argc);
        if (!args.empty() && args[0] == "sweep") {
            std::string cfg_path;
            std::vector<std::string> rest;
            for (std::size_t i = 1; i < args.size(); ++i) {
                if (args[i] == "--config" && i + 1 < args.size()) {
                    cfg_path = args[++i];
                } else if (args[i].rfind("--config=", 0) == 0) {
                    cfg_path = args[i].substr(9);
                } else {
                    rest.push_back(args[i]);
                }
            }
            if (!cfg_path.empty()) {
                for (auto* op : swp->get_options())
                    op->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
                std::ifstream in(cfg_path);
                if (!in) throw fp::IoError("cannot open config file " + cfg_path);
                args.assign(1, "sweep");
                std::string line;
                std::size_t line_no = 0;
                while (std::getline(in, line)) {
                    ++line_no;
                    const auto first = line.find_first_not_of(" \t\r");
                    if (first == std::string::npos || line[first] == '#') continue;
                    const auto eq = line.find('=');
                    if (eq == std::string::npos)
                        throw fp::ValidationError("config line " + std::to_string(line_no) +
                                                  " is not key=value: " + line);
                    std::string key = line.substr(first, eq - first);
                    std::string value = line.substr(eq + 1);
                    key.erase(key.find_last_not_of(" \t") + 1);
                    const auto vstart = value.find_first_not_of(" \t");
                    value = vstart == std::string::npos ? "" : value.substr(vstart);
                    value.erase(value.find_last_not_of(" \t\r") + 1);
                    if (!swp->get_option_no_throw("--" + key))
                        throw fp::ValidationError("unknown config key: " + key);
                    args.push_back("--" + key + "=" + value);
                }
                args.insert(args.end(), rest.begin(), rest.end());
            }
        }
        std::reverse(args.begin(), args.end());  // parse(vector) wants reversed args
        app.parse(args);

        if (*synth) {
            const auto data = fp::make_synthetic(synth_cfg);
            fp::save_dense(data.matrix, synth_out);
            fp::save_labels(data.matrix.cell_ids, data.labels.labels, synth_labels_out);
            std::cout << "wrote " << synth_out << " (" << synth_cfg.n_cells << " x "
                      << synth_cfg.n_genes << ") and " << synth_labels_out << '\n';
        } else if (*prep) {
            auto m = load_input(prep_io);
            m = fp::normalize_log(m, hvg_cfg.target_sum);
            m = fp::select_hvg(m, hvg_cfg);
            fp::save_dense(m, prep_out);
            std::cout << "wrote " << prep_out << " (" << m.n_cells() << " x " << m.n_genes()
                      << ")\n";
        } else if (*imp) {
            auto m = load_input(imp_io);
            fp::AutoencoderModel model;
            if (!model_in.empty()) {
                model = fp::load_model(model_in);
            } else {
                model = fp::train(m, ae_cfg);
                std::cout << "first-epoch loss " << model.first_epoch_loss
                          << ", final-epoch loss " << model.final_epoch_loss << '\n';
            }
            if (!model_out.empty()) fp::save_model(model, model_out);
            fp::save_dense(fp::impute_zeros(m, model), imp_out);
            std::cout << "wrote " << imp_out << '\n';
        } else if (*sub) {
            fp::SubspaceSpec spec;
            const auto strat = fp::strategy_from_name(sub_strategy);
            if (strat == fp::Strategy::GeneCluster) {
                const auto m = load_input(sub_io);
                const auto g = fp::build_gene_knn_graph(
                    m, std::min<int>(sub_neighbors, static_cast<int>(m.n_genes()) - 1));
                const auto p = fp::leiden_partition(g, sub_resolution, sub_seed);
                spec = fp::communities_to_subspaces(p);
                std::cout << "leiden found " << spec.k() << " communities, modularity "
                          << p.quality << '\n';
            } else {
                if (sub_d_prime <= 0) {
                    const auto m = load_input(sub_io);
                    sub_d_prime = static_cast<int>(m.n_genes());
                }
                switch (strat) {
                    case fp::Strategy::Sequential:
                        spec = fp::sequential_subspaces(sub_d_prime, sub_k, sub_overlap);
                        break;
                    case fp::Strategy::Shuffled:
                        spec = fp::shuffled_subspaces(sub_d_prime, sub_k, sub_overlap, sub_seed);
                        break;
                    default:
                        spec = fp::random_bucket_subspaces(sub_d_prime, sub_k, sub_overlap,
                                                           sub_seed);
                }
            }
            save_subspace_spec(spec, sub_out);
            std::cout << "wrote " << sub_out << " (k=" << spec.k() << ")\n";
        } else if (*red) {
            const auto m = load_input(red_io);
            const auto spec = load_subspace_spec(red_spec);
            const auto blocks = fp::reduce_subspaces(m, spec, red_threshold);
            std::vector<Eigen::Index> widths;
            for (const auto& b : blocks) widths.push_back(b.scores.cols());
            save_embedding(fp::merge_blocks(blocks), m.cell_ids, widths, red_out);
            std::cout << "wrote " << red_out << '\n';
        } else if (*clu) {
            auto [points, ids] = load_embedding(clu_in);
            const auto assign = fp::kmeans(points, km_cfg);
            fp::save_labels(ids, assign.labels, clu_out);
            std::cout << "wrote " << clu_out << " (inertia " << assign.inertia << ", "
                      << assign.n_iter << " iterations)\n";
        } else if (*swp) {
            const auto raw = load_input(swp_io);
            const auto truth = fp::load_labels(swp_labels);
            pipe_cfg.impute_enabled = swp_impute;
            pipe_cfg.strategies.clear();
            for (const auto& s : swp_strategies)
                pipe_cfg.strategies.push_back(fp::strategy_from_name(s));

            const auto t0 = std::chrono::steady_clock::now();
            const auto processed = fp::preprocess_pipeline(raw, pipe_cfg);
            const auto t1 = std::chrono::steady_clock::now();

            auto report = fp::run_sweep(processed, truth, pipe_cfg);
            report.timings_sec.insert(
                report.timings_sec.begin(),
                {"preprocess", std::chrono::duration<double>(t1 - t0).count()});

            std::string strategies_echo;
            for (const auto& s : swp_strategies)
                strategies_echo += (strategies_echo.empty() ? "" : ",") + s;
            report.config_echo = {
                {"input", swp_io.input.empty() ? swp_io.mtx : swp_io.input},
                {"labels", swp_labels},
                {"target_sum", fp::format10(pipe_cfg.hvg.target_sum)},
                {"n_top_genes", std::to_string(pipe_cfg.hvg.n_top_genes)},
                {"n_bins", std::to_string(pipe_cfg.hvg.n_bins)},
                {"impute", swp_impute ? "true" : "false"},
                {"strategies", strategies_echo},
                {"k_min", std::to_string(pipe_cfg.k_min)},
                {"k_max", std::to_string(pipe_cfg.k_max)},
                {"overlap_fraction", fp::format10(pipe_cfg.overlap_fraction)},
                {"variance_threshold", fp::format10(pipe_cfg.variance_threshold)},
                {"clusters", std::to_string(pipe_cfg.kmeans_cfg.n_clusters)},
                {"n_init", std::to_string(pipe_cfg.kmeans_cfg.n_init)},
                {"neighbors", std::to_string(pipe_cfg.leiden_neighbors)},
                {"resolution", fp::format10(pipe_cfg.leiden_resolution)},
                {"seed", std::to_string(pipe_cfg.seed)},
            };

            std::filesystem::create_directories(swp_out_dir);
            const auto report_path = swp_out_dir + "/report.json";
            const auto plot_path = swp_out_dir + "/plot_data.tsv";
            fp::save_report(report, report_path);
            fp::emit_plot_data(report, plot_path);

            std::cout << "baseline ARI " << fp::format10(report.baseline_ari) << '\n';
            for (const auto& s : report.strategies)
                std::cout << fp::strategy_name(s.strategy) << ": mean "
                          << fp::format10(s.mean_ari) << ", max " << fp::format10(s.max_ari)
                          << ", wins " << s.win_count << '/' << s.trial_count << '\n';
            for (const auto& [stage, sec] : report.timings_sec)
                std::cout << "time " << stage << ": " << sec << "s\n";
            std::cout << "wrote " << report_path << " and " << plot_path << '\n';
        } else if (*rep) {
            const auto r = fp::load_report(rep_in);
            std::cout << "baseline ARI " << fp::format10(r.baseline_ari) << '\n';
            for (const auto& s : r.strategies)
                std::cout << fp::strategy_name(s.strategy) << ": mean "
                          << fp::format10(s.mean_ari) << ", max " << fp::format10(s.max_ari)
                          << ", wins " << s.win_count << '/' << s.trial_count << '\n';
            if (!rep_plot.empty()) fp::emit_plot_data(r, rep_plot);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const fp::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fp::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const fp::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
