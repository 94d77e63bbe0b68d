#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "featpca/errors.hpp"
#include "featpca/subspace.hpp"

namespace featpca {

/// Formats a double with 10 significant digits, the report's canonical
/// number format.
inline std::string format10(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

/// Rounds to the nearest double representable by the canonical 10-digit
/// format. Values stored in a report are quantized so save/load is an
/// exact identity.
inline double quantize10(double x) {
    return std::strtod(format10(x).c_str(), nullptr);
}

struct StrategySeries {
    Strategy strategy = Strategy::Sequential;
    std::vector<std::pair<int, double>> series;        // (division count, ari)
    std::vector<std::pair<int, std::string>> errors;   // failed trials
    int win_count = 0;
    int trial_count = 0;
    double mean_ari = 0.0;
    double max_ari = 0.0;

    bool operator==(const StrategySeries&) const = default;
};

struct PipelineReport {
    double baseline_ari = 0.0;
    std::vector<StrategySeries> strategies;
    std::vector<std::pair<std::string, std::string>> config_echo;
    // Wall-clock timings are informational only; they are not serialized,
    // keeping report files byte-stable across identically seeded runs.
    std::vector<std::pair<std::string, double>> timings_sec;

    bool operator==(const PipelineReport& o) const {
        return baseline_ari == o.baseline_ari && strategies == o.strategies &&
               config_echo == o.config_echo;
    }
};

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Writes the report as JSON with a fixed key order and canonical
/// 10-significant-digit number formatting.
inline void save_report(const PipelineReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "{\n";
    out << "  \"featpca_report_version\": 1,\n";
    out << "  \"config\": {";
    for (std::size_t i = 0; i < r.config_echo.size(); ++i) {
        out << (i ? ", " : "") << '"' << detail::json_escape(r.config_echo[i].first)
            << "\": \"" << detail::json_escape(r.config_echo[i].second) << '"';
    }
    out << "},\n";
    out << "  \"baseline_ari\": " << format10(r.baseline_ari) << ",\n";
    out << "  \"strategies\": [";
    for (std::size_t i = 0; i < r.strategies.size(); ++i) {
        const auto& s = r.strategies[i];
        out << (i ? ",\n" : "\n") << "    {\"strategy\": \"" << strategy_name(s.strategy)
            << "\", \"series\": [";
        for (std::size_t j = 0; j < s.series.size(); ++j)
            out << (j ? ", " : "") << '[' << s.series[j].first << ", "
                << format10(s.series[j].second) << ']';
        out << "], \"errors\": [";
        for (std::size_t j = 0; j < s.errors.size(); ++j)
            out << (j ? ", " : "") << '[' << s.errors[j].first << ", \""
                << detail::json_escape(s.errors[j].second) << "\"]";
        out << "], \"win_count\": " << s.win_count << ", \"trial_count\": " << s.trial_count
            << ", \"mean_ari\": " << format10(s.mean_ari)
            << ", \"max_ari\": " << format10(s.max_ari) << '}';
    }
    out << (r.strategies.empty() ? "" : "\n  ") << "]\n";
    out << "}\n";
    if (!out) throw IoError("write failed: " + path);
}

inline PipelineReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    // ordered_json keeps the on-disk key order for the config echo.
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("bad report file: ") + e.what());
    }
    if (j.value("featpca_report_version", 0) != 1)
        throw ValidationError("unsupported report version in " + path);

    PipelineReport r;
    r.baseline_ari = j.at("baseline_ari").get<double>();
    for (auto it = j.at("config").begin(); it != j.at("config").end(); ++it)
        r.config_echo.emplace_back(it.key(), it.value().get<std::string>());
    for (const auto& sj : j.at("strategies")) {
        StrategySeries s;
        s.strategy = strategy_from_name(sj.at("strategy").get<std::string>());
        for (const auto& e : sj.at("series"))
            s.series.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
        for (const auto& e : sj.at("errors"))
            s.errors.emplace_back(e.at(0).get<int>(), e.at(1).get<std::string>());
        s.win_count = sj.at("win_count").get<int>();
        s.trial_count = sj.at("trial_count").get<int>();
        s.mean_ari = sj.at("mean_ari").get<double>();
        s.max_ari = sj.at("max_ari").get<double>();
        r.strategies.push_back(std::move(s));
    }
    return r;
}

/// Plot-ready delimited text: a per-strategy summary table followed by
/// the full (strategy, k, ari) series.
inline void emit_plot_data(const PipelineReport& r, const std::string& path,
                           char delimiter = '\t') {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    const char d = delimiter;
    out << "strategy" << d << "baseline_ari" << d << "mean_ari" << d << "max_ari" << d
        << "win_count" << d << "trial_count" << '\n';
    for (const auto& s : r.strategies)
        out << strategy_name(s.strategy) << d << format10(r.baseline_ari) << d
            << format10(s.mean_ari) << d << format10(s.max_ari) << d << s.win_count << d
            << s.trial_count << '\n';
    out << '\n';
    out << "strategy" << d << "k" << d << "ari" << '\n';
    for (const auto& s : r.strategies)
        for (const auto& [k, ari] : s.series)
            out << strategy_name(s.strategy) << d << k << d << format10(ari) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace featpca
