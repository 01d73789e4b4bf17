#include "slicegraph/louvain.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>

namespace slicegraph {

double weighted_modularity(int n, const std::vector<WeightedEdge>& edges,
                           const std::vector<int>& community, double resolution) {
    double two_m = 0.0;
    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (const auto& [a, b, w] : edges) {
        degree[static_cast<std::size_t>(a)] += w;
        degree[static_cast<std::size_t>(b)] += w;
        two_m += 2.0 * w;
    }
    if (two_m == 0.0) return 0.0;
    std::unordered_map<int, double> internal, total;
    for (const auto& [a, b, w] : edges) {
        if (community[static_cast<std::size_t>(a)] == community[static_cast<std::size_t>(b)]) {
            internal[community[static_cast<std::size_t>(a)]] += 2.0 * w;
        }
    }
    for (int v = 0; v < n; ++v) {
        total[community[static_cast<std::size_t>(v)]] += degree[static_cast<std::size_t>(v)];
    }
    double q = 0.0;
    for (const auto& [c, tot] : total) {
        const double in = internal.count(c) ? internal.at(c) : 0.0;
        q += in / two_m - resolution * (tot / two_m) * (tot / two_m);
    }
    return q;
}

namespace {

struct Level {
    int n;
    std::vector<std::vector<std::pair<int, double>>> adj;  // neighbor, weight
    std::vector<double> self_loop;
    std::vector<double> degree;  // includes 2 * self_loop
    double two_m = 0.0;
};

Level make_level(int n, const std::vector<WeightedEdge>& edges) {
    Level lv;
    lv.n = n;
    lv.adj.resize(static_cast<std::size_t>(n));
    lv.self_loop.assign(static_cast<std::size_t>(n), 0.0);
    lv.degree.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto& [a, b, w] : edges) {
        if (a == b) {
            lv.self_loop[static_cast<std::size_t>(a)] += w;
            lv.degree[static_cast<std::size_t>(a)] += 2.0 * w;
            lv.two_m += 2.0 * w;
        } else {
            lv.adj[static_cast<std::size_t>(a)].emplace_back(b, w);
            lv.adj[static_cast<std::size_t>(b)].emplace_back(a, w);
            lv.degree[static_cast<std::size_t>(a)] += w;
            lv.degree[static_cast<std::size_t>(b)] += w;
            lv.two_m += 2.0 * w;
        }
    }
    return lv;
}

// One level of order-shuffled local moves; returns the community per node.
std::vector<int> local_moves(const Level& lv, double resolution, std::mt19937_64& rng) {
    std::vector<int> community(static_cast<std::size_t>(lv.n));
    std::iota(community.begin(), community.end(), 0);
    std::vector<double> com_total(lv.degree.begin(), lv.degree.end());

    std::vector<int> order(static_cast<std::size_t>(lv.n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    if (lv.two_m == 0.0) return community;
    bool moved = true;
    while (moved) {
        moved = false;
        for (int u : order) {
            const int cu = community[static_cast<std::size_t>(u)];
            // Weight from u into each neighboring community.
            std::unordered_map<int, double> link;
            link[cu];  // ensure current community is a candidate
            for (const auto& [v, w] : lv.adj[static_cast<std::size_t>(u)]) {
                link[community[static_cast<std::size_t>(v)]] += w;
            }
            const double ku = lv.degree[static_cast<std::size_t>(u)];
            com_total[static_cast<std::size_t>(cu)] -= ku;

            // Gain of joining community c (relative constant terms dropped):
            // link(u,c) - resolution * ku * tot(c) / two_m.
            int best_c = cu;
            double best_gain = link[cu] - resolution * ku * com_total[static_cast<std::size_t>(cu)] / lv.two_m;
            for (const auto& [c, l] : link) {
                const double gain = l - resolution * ku * com_total[static_cast<std::size_t>(c)] / lv.two_m;
                if (gain > best_gain + 1e-12 ||
                    (std::abs(gain - best_gain) <= 1e-12 && c < best_c)) {
                    best_gain = gain;
                    best_c = c;
                }
            }
            com_total[static_cast<std::size_t>(best_c)] += ku;
            if (best_c != cu) {
                community[static_cast<std::size_t>(u)] = best_c;
                moved = true;
            }
        }
    }
    return community;
}

std::vector<int> renumber(const std::vector<int>& community) {
    std::unordered_map<int, int> remap;
    std::vector<int> out(community.size());
    for (std::size_t i = 0; i < community.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(community[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    return out;
}

}  // namespace

std::vector<int> louvain_communities(int n, const std::vector<WeightedEdge>& edges,
                                     double resolution, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> assignment(static_cast<std::size_t>(n));
    std::iota(assignment.begin(), assignment.end(), 0);

    int level_n = n;
    std::vector<WeightedEdge> level_edges = edges;
    double best_q = weighted_modularity(n, edges, assignment, resolution);

    while (true) {
        Level lv = make_level(level_n, level_edges);
        std::vector<int> local = renumber(local_moves(lv, resolution, rng));

        std::vector<int> merged(assignment.size());
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            merged[i] = local[static_cast<std::size_t>(assignment[i])];
        }
        const double q = weighted_modularity(n, edges, merged, resolution);
        if (q <= best_q + 1e-12) break;
        best_q = q;
        assignment = merged;

        // Aggregate: communities become nodes, parallel edges summed.
        const int next_n = 1 + *std::max_element(local.begin(), local.end());
        std::unordered_map<std::int64_t, double> agg;
        for (const auto& [a, b, w] : level_edges) {
            int ca = local[static_cast<std::size_t>(a)];
            int cb = local[static_cast<std::size_t>(b)];
            if (ca > cb) std::swap(ca, cb);
            agg[static_cast<std::int64_t>(ca) * next_n + cb] += w;
        }
        level_edges.clear();
        std::vector<std::int64_t> keys;
        keys.reserve(agg.size());
        for (const auto& [k, w] : agg) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (std::int64_t k : keys) {
            level_edges.emplace_back(static_cast<int>(k / next_n),
                                     static_cast<int>(k % next_n), agg[k]);
        }
        level_n = next_n;
        if (level_n == static_cast<int>(assignment.size())) break;
    }
    return renumber(assignment);
}

}  // namespace slicegraph
