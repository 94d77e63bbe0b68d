#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <tuple>
#include <vector>

#include "featpca/errors.hpp"
#include "featpca/matrix.hpp"
#include "featpca/rng.hpp"
#include "featpca/subspace.hpp"

namespace featpca {

/// Undirected weighted graph over gene vertices. Edges are stored once
/// with u < v; weights are finite and >= 0; no self-loops.
struct GeneGraph {
    int n_vertices = 0;
    std::vector<std::tuple<int, int, double>> edges;

    void validate() const {
        std::vector<std::tuple<int, int, double>> sorted = edges;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            auto [u, v, w] = sorted[i];
            if (u < 0 || v < 0 || u >= n_vertices || v >= n_vertices)
                throw ValidationError("edge endpoint out of range");
            if (u == v) throw ValidationError("self-loop");
            if (u > v) throw ValidationError("edge not stored as u < v");
            if (!(w >= 0.0) || !std::isfinite(w))
                throw ValidationError("edge weight must be finite and >= 0");
            if (i > 0 && std::get<0>(sorted[i - 1]) == u && std::get<1>(sorted[i - 1]) == v)
                throw ValidationError("duplicate edge");
        }
    }
};

struct CommunityPartition {
    std::vector<int> community_of;
    double quality = 0.0;

    int n_communities() const {
        int c = 0;
        for (int x : community_of) c = std::max(c, x + 1);
        return c;
    }
};

namespace detail {

inline std::vector<double> column_correlations(const Matrix& v, Eigen::Index j,
                                               const Vector& means, const Vector& norms) {
    // Pearson correlation of column j against every column; columns with
    // zero variance correlate 0 with everything.
    const auto d = v.cols();
    std::vector<double> corr(static_cast<std::size_t>(d), 0.0);
    if (norms(j) == 0.0) return corr;
    const Vector cj = v.col(j).array() - means(j);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (i == j || norms(i) == 0.0) continue;
        const double dot = ((v.col(i).array() - means(i)) * cj.array()).sum();
        corr[static_cast<std::size_t>(i)] = dot / (norms(i) * norms(j));
    }
    return corr;
}

}  // namespace detail

/// kNN graph over genes by Pearson correlation across cells. Each gene
/// links to its n_neighbors most-correlated genes; a link kept by either
/// endpoint becomes an undirected edge with weight max(0, correlation).
inline GeneGraph build_gene_knn_graph(const ExpressionMatrix& m, int n_neighbors) {
    const auto d = m.n_genes();
    if (n_neighbors < 1) throw ValidationError("n_neighbors must be >= 1");
    if (d <= n_neighbors)
        throw ValidationError("need more genes than n_neighbors");

    Vector means(d), norms(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        means(j) = m.values.col(j).mean();
        norms(j) = std::sqrt((m.values.col(j).array() - means(j)).square().sum());
    }

    std::vector<std::tuple<int, int, double>> picked;  // directed picks, as (min,max,w)
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto corr = detail::column_correlations(m.values, j, means, norms);
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(d) - 1);
        for (Eigen::Index i = 0; i < d; ++i)
            if (i != j) idx.push_back(static_cast<int>(i));
        std::partial_sort(idx.begin(), idx.begin() + n_neighbors, idx.end(),
                          [&](int a, int b) {
                              const double ca = corr[static_cast<std::size_t>(a)];
                              const double cb = corr[static_cast<std::size_t>(b)];
                              if (ca != cb) return ca > cb;
                              return a < b;
                          });
        for (int t = 0; t < n_neighbors; ++t) {
            const int i = idx[static_cast<std::size_t>(t)];
            const double w = std::max(corr[static_cast<std::size_t>(i)], 0.0);
            picked.emplace_back(std::min<int>(static_cast<int>(j), i),
                                std::max<int>(static_cast<int>(j), i), w);
        }
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end(),
                             [](const auto& a, const auto& b) {
                                 return std::get<0>(a) == std::get<0>(b) &&
                                        std::get<1>(a) == std::get<1>(b);
                             }),
                 picked.end());

    GeneGraph g;
    g.n_vertices = static_cast<int>(d);
    g.edges = std::move(picked);
    return g;
}

/// Standard modularity at the given resolution, computed from scratch
/// on a flat partition. 0 for a zero-weight graph.
inline double modularity(const GeneGraph& g, const std::vector<int>& community_of,
                         double resolution = 1.0) {
    double two_m = 0.0;
    std::vector<double> strength(static_cast<std::size_t>(g.n_vertices), 0.0);
    for (auto [u, v, w] : g.edges) {
        strength[static_cast<std::size_t>(u)] += w;
        strength[static_cast<std::size_t>(v)] += w;
        two_m += 2.0 * w;
    }
    if (two_m == 0.0) return 0.0;

    const int nc = 1 + *std::max_element(community_of.begin(), community_of.end());
    std::vector<double> in_w(static_cast<std::size_t>(nc), 0.0);
    std::vector<double> tot(static_cast<std::size_t>(nc), 0.0);
    for (auto [u, v, w] : g.edges)
        if (community_of[static_cast<std::size_t>(u)] ==
            community_of[static_cast<std::size_t>(v)])
            in_w[static_cast<std::size_t>(community_of[static_cast<std::size_t>(u)])] +=
                2.0 * w;
    for (int i = 0; i < g.n_vertices; ++i)
        tot[static_cast<std::size_t>(community_of[static_cast<std::size_t>(i)])] +=
            strength[static_cast<std::size_t>(i)];

    double q = 0.0;
    for (int c = 0; c < nc; ++c) {
        q += in_w[static_cast<std::size_t>(c)] / two_m -
             resolution * (tot[static_cast<std::size_t>(c)] / two_m) *
                 (tot[static_cast<std::size_t>(c)] / two_m);
    }
    return q;
}

namespace detail {

// Aggregated multigraph used inside the Leiden passes. Self-loop weight
// uses the doubled-internal convention so that node strengths and 2m are
// invariant under aggregation.
struct AggGraph {
    std::vector<std::vector<std::pair<int, double>>> adj;  // no self entries
    std::vector<double> self_w;
    std::vector<double> strength;
    double two_m = 0.0;

    int size() const { return static_cast<int>(adj.size()); }
};

inline AggGraph agg_from(const GeneGraph& g) {
    AggGraph a;
    a.adj.resize(static_cast<std::size_t>(g.n_vertices));
    a.self_w.assign(static_cast<std::size_t>(g.n_vertices), 0.0);
    a.strength.assign(static_cast<std::size_t>(g.n_vertices), 0.0);
    for (auto [u, v, w] : g.edges) {
        a.adj[static_cast<std::size_t>(u)].emplace_back(v, w);
        a.adj[static_cast<std::size_t>(v)].emplace_back(u, w);
        a.strength[static_cast<std::size_t>(u)] += w;
        a.strength[static_cast<std::size_t>(v)] += w;
        a.two_m += 2.0 * w;
    }
    return a;
}

constexpr double kGainEps = 1e-12;

// Queue-based local move, greedy best-gain target, seeded visit order.
// Returns true if any node changed community.
inline bool local_move(const AggGraph& g, std::vector<int>& comm, double resolution,
                       Rng& rng) {
    const int n = g.size();
    std::vector<double> tot(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        tot[static_cast<std::size_t>(comm[static_cast<std::size_t>(i)])] +=
            g.strength[static_cast<std::size_t>(i)];

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::deque<int> queue(order.begin(), order.end());
    std::vector<char> queued(static_cast<std::size_t>(n), 1);

    bool changed = false;
    std::vector<double> link_w(static_cast<std::size_t>(n), 0.0);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        queued[static_cast<std::size_t>(v)] = 0;

        const int cv = comm[static_cast<std::size_t>(v)];
        std::vector<int> touched;
        for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
            const int cu = comm[static_cast<std::size_t>(u)];
            if (link_w[static_cast<std::size_t>(cu)] == 0.0 && w > 0.0)
                touched.push_back(cu);
            link_w[static_cast<std::size_t>(cu)] += w;
        }

        const double kv = g.strength[static_cast<std::size_t>(v)];
        const double base = link_w[static_cast<std::size_t>(cv)] -
                            resolution * kv *
                                (tot[static_cast<std::size_t>(cv)] - kv) / g.two_m;
        double best_gain = 0.0;
        int best_c = cv;
        for (int c : touched) {
            if (c == cv) continue;
            const double gain = link_w[static_cast<std::size_t>(c)] -
                                resolution * kv * tot[static_cast<std::size_t>(c)] / g.two_m -
                                base;
            if (gain > best_gain + kGainEps ||
                (gain > best_gain - kGainEps && best_c != cv && c < best_c)) {
                best_gain = gain;
                best_c = c;
            }
        }
        for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)])
            link_w[static_cast<std::size_t>(comm[static_cast<std::size_t>(u)])] = 0.0;

        if (best_c != cv) {
            tot[static_cast<std::size_t>(cv)] -= kv;
            tot[static_cast<std::size_t>(best_c)] += kv;
            comm[static_cast<std::size_t>(v)] = best_c;
            changed = true;
            for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
                if (!queued[static_cast<std::size_t>(u)] &&
                    comm[static_cast<std::size_t>(u)] != best_c) {
                    queue.push_back(u);
                    queued[static_cast<std::size_t>(u)] = 1;
                }
            }
        }
    }
    return changed;
}

// Refinement: within each community of `comm`, grow connected
// sub-communities by merging singleton nodes into the best
// non-negative-gain neighbor sub-community. Refined communities are
// connected by construction.
inline std::vector<int> refine(const AggGraph& g, const std::vector<int>& comm, double resolution,
                               Rng& rng) {
    const int n = g.size();
    std::vector<int> sub(static_cast<std::size_t>(n));
    std::iota(sub.begin(), sub.end(), 0);
    std::vector<double> sub_tot(g.strength);
    std::vector<int> sub_size(static_cast<std::size_t>(n), 1);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<double> link_w(static_cast<std::size_t>(n), 0.0);
    for (int v : order) {
        if (sub_size[static_cast<std::size_t>(sub[static_cast<std::size_t>(v)])] > 1)
            continue;  // only singletons initiate merges
        const int cv = comm[static_cast<std::size_t>(v)];

        std::vector<int> touched;
        for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
            if (comm[static_cast<std::size_t>(u)] != cv || w <= 0.0) continue;
            const int su = sub[static_cast<std::size_t>(u)];
            if (link_w[static_cast<std::size_t>(su)] == 0.0) touched.push_back(su);
            link_w[static_cast<std::size_t>(su)] += w;
        }

        const double kv = g.strength[static_cast<std::size_t>(v)];
        double best_gain = -kGainEps;
        int best_s = -1;
        for (int s : touched) {
            if (s == sub[static_cast<std::size_t>(v)]) continue;
            const double gain =
                link_w[static_cast<std::size_t>(s)] -
                resolution * kv * sub_tot[static_cast<std::size_t>(s)] / g.two_m;
            if (gain > best_gain + kGainEps ||
                (gain > best_gain - kGainEps && best_s >= 0 && s < best_s)) {
                best_gain = gain;
                best_s = s;
            }
        }
        for (int s : touched) link_w[static_cast<std::size_t>(s)] = 0.0;

        if (best_s >= 0) {
            const int old = sub[static_cast<std::size_t>(v)];
            sub_tot[static_cast<std::size_t>(old)] -= kv;
            --sub_size[static_cast<std::size_t>(old)];
            sub[static_cast<std::size_t>(v)] = best_s;
            sub_tot[static_cast<std::size_t>(best_s)] += kv;
            ++sub_size[static_cast<std::size_t>(best_s)];
        }
    }
    return sub;
}

inline void renumber(std::vector<int>& labels) {
    if (labels.empty()) return;
    // label values may exceed labels.size() (e.g. community ids carried
    // across an aggregation step), so size the map by the largest label
    const int top = *std::max_element(labels.begin(), labels.end());
    std::vector<int> map(static_cast<std::size_t>(top) + 1, -1);
    int next = 0;
    for (int& l : labels) {
        if (map[static_cast<std::size_t>(l)] < 0) map[static_cast<std::size_t>(l)] = next++;
        l = map[static_cast<std::size_t>(l)];
    }
}

inline AggGraph aggregate(const AggGraph& g, const std::vector<int>& groups, int n_groups) {
    AggGraph a;
    a.adj.resize(static_cast<std::size_t>(n_groups));
    a.self_w.assign(static_cast<std::size_t>(n_groups), 0.0);
    a.strength.assign(static_cast<std::size_t>(n_groups), 0.0);
    a.two_m = g.two_m;

    std::vector<std::vector<double>> acc(static_cast<std::size_t>(n_groups));
    for (auto& row : acc) row.assign(static_cast<std::size_t>(n_groups), 0.0);
    for (int v = 0; v < g.size(); ++v) {
        const int gv = groups[static_cast<std::size_t>(v)];
        a.self_w[static_cast<std::size_t>(gv)] += g.self_w[static_cast<std::size_t>(v)];
        a.strength[static_cast<std::size_t>(gv)] += g.strength[static_cast<std::size_t>(v)];
        for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
            const int gu = groups[static_cast<std::size_t>(u)];
            if (gu == gv)
                a.self_w[static_cast<std::size_t>(gv)] += 0.5 * w;  // seen from both ends
            else
                acc[static_cast<std::size_t>(gv)][static_cast<std::size_t>(gu)] += w;
        }
    }
    for (int i = 0; i < n_groups; ++i)
        for (int j = 0; j < n_groups; ++j)
            if (acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0 && i != j)
                a.adj[static_cast<std::size_t>(i)].emplace_back(
                    j, acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    return a;
}

// Splits any disconnected community into its connected components.
// Splitting along missing edges never decreases modularity.
inline void split_disconnected(const GeneGraph& g, std::vector<int>& comm) {
    const int n = g.n_vertices;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [u, v, w] : g.edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    std::vector<int> out(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int start = 0; start < n; ++start) {
        if (out[static_cast<std::size_t>(start)] >= 0) continue;
        const int c = comm[static_cast<std::size_t>(start)];
        std::vector<int> stack{start};
        out[static_cast<std::size_t>(start)] = next;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int u : adj[static_cast<std::size_t>(v)]) {
                if (out[static_cast<std::size_t>(u)] < 0 &&
                    comm[static_cast<std::size_t>(u)] == c) {
                    out[static_cast<std::size_t>(u)] = next;
                    stack.push_back(u);
                }
            }
        }
        ++next;
    }
    comm = std::move(out);
}

}  // namespace detail

/// Leiden community detection: repeated local move, refinement, and
/// aggregation, optimizing modularity at the given resolution.
/// Deterministic given seed; every returned community induces a
/// connected subgraph.
inline CommunityPartition leiden_partition(const GeneGraph& g, double resolution,
                                           std::uint64_t seed) {
    if (g.n_vertices < 1) throw ValidationError("empty graph");
    if (resolution <= 0) throw ValidationError("resolution must be > 0");

    CommunityPartition out;
    double total_w = 0.0;
    for (auto [u, v, w] : g.edges) total_w += w;
    if (total_w == 0.0) {
        out.community_of.resize(static_cast<std::size_t>(g.n_vertices));
        std::iota(out.community_of.begin(), out.community_of.end(), 0);
        out.quality = 0.0;
        return out;
    }

    Rng rng(seed);
    detail::AggGraph agg = detail::agg_from(g);
    // flat[i] = aggregated node currently holding flat vertex i
    std::vector<int> flat(static_cast<std::size_t>(g.n_vertices));
    std::iota(flat.begin(), flat.end(), 0);
    std::vector<int> comm(flat);  // community per aggregated node

    for (;;) {
        detail::local_move(agg, comm, resolution, rng);
        std::vector<int> refined = detail::refine(agg, comm, resolution, rng);
        detail::renumber(refined);
        const int n_refined = 1 + *std::max_element(refined.begin(), refined.end());
        // Identity aggregation means the local optimum cannot improve further.
        if (n_refined == agg.size()) break;

        // Next pass starts from the current partition, induced on the
        // refined aggregation.
        std::vector<int> next_comm(static_cast<std::size_t>(n_refined), -1);
        for (int v = 0; v < agg.size(); ++v)
            next_comm[static_cast<std::size_t>(refined[static_cast<std::size_t>(v)])] =
                comm[static_cast<std::size_t>(v)];
        detail::renumber(next_comm);

        for (auto& f : flat) f = refined[static_cast<std::size_t>(f)];
        agg = detail::aggregate(agg, refined, n_refined);
        comm = std::move(next_comm);
        if (n_refined == 1) break;
    }

    out.community_of.resize(static_cast<std::size_t>(g.n_vertices));
    for (int i = 0; i < g.n_vertices; ++i)
        out.community_of[static_cast<std::size_t>(i)] =
            comm[static_cast<std::size_t>(flat[static_cast<std::size_t>(i)])];
    detail::renumber(out.community_of);
    detail::split_disconnected(g, out.community_of);
    out.quality = modularity(g, out.community_of, resolution);
    return out;
}

/// One subspace per community; communities smaller than 2 genes are
/// merged into the largest community so every block supports PCA.
inline SubspaceSpec communities_to_subspaces(const CommunityPartition& p) {
    const int nc = p.n_communities();
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(nc));
    for (std::size_t i = 0; i < p.community_of.size(); ++i)
        groups[static_cast<std::size_t>(p.community_of[i])].push_back(static_cast<int>(i));

    std::size_t largest = 0;
    for (std::size_t c = 1; c < groups.size(); ++c)
        if (groups[c].size() > groups[largest].size()) largest = c;

    SubspaceSpec spec;
    spec.strategy = Strategy::GeneCluster;
    spec.overlap_fraction = 0.0;
    std::vector<int> merged;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        if (c != largest && groups[c].size() < 2) {
            merged.insert(merged.end(), groups[c].begin(), groups[c].end());
        } else if (c != largest) {
            spec.partitions.push_back(groups[c]);
        }
    }
    auto& big = groups[largest];
    big.insert(big.end(), merged.begin(), merged.end());
    std::sort(big.begin(), big.end());
    spec.partitions.push_back(big);
    // keep deterministic order: largest-community block goes last
    return spec;
}

}  // namespace featpca
