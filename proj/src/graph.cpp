#include "slicegraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace slicegraph {

using nlohmann::json;

std::vector<std::vector<int>> SliceGraph::adjacency() const {
    std::vector<std::vector<int>> adj(nodes.size());
    for (const auto& e : edges) {
        adj[static_cast<std::size_t>(e.a)].push_back(e.b);
        adj[static_cast<std::size_t>(e.b)].push_back(e.a);
    }
    return adj;
}

int SliceGraph::max_degree() const {
    std::vector<int> deg(nodes.size(), 0);
    for (const auto& e : edges) {
        ++deg[static_cast<std::size_t>(e.a)];
        ++deg[static_cast<std::size_t>(e.b)];
    }
    return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

std::size_t intersection_size(const std::vector<NeuronKey>& a,
                              const std::vector<NeuronKey>& b) {
    std::size_t n = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

double distance_from_counts(std::size_t inter, std::size_t size_a,
                            std::size_t size_b, Metric metric) {
    const double c = static_cast<double>(inter);
    switch (metric) {
        case Metric::jaccard:
            return 1.0 - c / static_cast<double>(size_a + size_b - inter);
        case Metric::cosine:
            return 1.0 - c / std::sqrt(static_cast<double>(size_a) *
                                       static_cast<double>(size_b));
        case Metric::overlap:
            return 1.0 - c / static_cast<double>(std::min(size_a, size_b));
    }
    return 1.0;
}

double set_distance(const SliceKeySet& a, const SliceKeySet& b, Metric metric) {
    if (a.keys.empty() || b.keys.empty()) {
        throw ValidationError("set_distance: empty key set");
    }
    return distance_from_counts(intersection_size(a.keys, b.keys),
                                a.keys.size(), b.keys.size(), metric);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stratum_seed(std::uint64_t seed, std::int64_t run_id, int decile) {
    return splitmix64(splitmix64(seed ^ static_cast<std::uint64_t>(run_id)) ^
                      static_cast<std::uint64_t>(decile));
}

}  // namespace

std::vector<const SliceKeySet*> cap_slices(const CellCache& cell, int size_cap,
                                           std::uint64_t seed) {
    if (size_cap < 1) throw ValidationError("size_cap must be >= 1");
    const std::size_t total = cell.total_slices();
    std::vector<const SliceKeySet*> all;
    all.reserve(total);
    for (const auto& run : cell.runs) {
        for (const auto& s : run.slices) all.push_back(&s);
    }
    if (total <= static_cast<std::size_t>(size_cap)) return all;

    // Strata keyed by (run order, position decile); map iteration gives the
    // deterministic stratum order used for remainder and minimum-quota fixups.
    struct Stratum {
        std::int64_t run_id;
        int decile;
        std::vector<const SliceKeySet*> members;
        int alloc = 0;
        double remainder = 0.0;
    };
    std::map<std::pair<std::int64_t, int>, std::vector<const SliceKeySet*>> buckets;
    for (const auto& run : cell.runs) {
        const int len = static_cast<int>(run.slices.size());
        for (const auto& s : run.slices) {
            const int dec = std::min(9, 10 * s.slice_index / std::max(1, len));
            buckets[{run.run_id, dec}].push_back(&s);
        }
    }
    std::vector<Stratum> strata;
    strata.reserve(buckets.size());
    for (auto& [key, members] : buckets) {
        strata.push_back(Stratum{key.first, key.second, std::move(members)});
    }

    // Two-level largest-remainder allocation: run totals first (so every run
    // stays within +-1 of its proportional share), then deciles within a run.
    struct Quota {
        std::int64_t id;
        int size = 0;
        int alloc = 0;
        double remainder = 0.0;
    };
    const auto largest_remainder = [](std::vector<Quota>& quotas, int budget) {
        int total_size = 0;
        for (const auto& q : quotas) total_size += q.size;
        int allocated = 0;
        for (auto& q : quotas) {
            const double share = static_cast<double>(budget) * q.size / total_size;
            q.alloc = std::min(static_cast<int>(share), q.size);
            q.remainder = share - static_cast<int>(share);
            allocated += q.alloc;
        }
        std::vector<std::size_t> order(quotas.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return quotas[a].remainder > quotas[b].remainder;
        });
        for (std::size_t oi = 0; allocated < budget; oi = (oi + 1) % order.size()) {
            auto& q = quotas[order[oi]];
            if (q.alloc < q.size) {
                ++q.alloc;
                ++allocated;
            }
        }
    };

    std::vector<Quota> run_quotas;
    for (const auto& run : cell.runs) {
        run_quotas.push_back(Quota{run.run_id, static_cast<int>(run.slices.size()), 0, 0.0});
    }
    largest_remainder(run_quotas, size_cap);

    for (const auto& rq : run_quotas) {
        std::vector<Quota> decile_quotas;
        std::vector<Stratum*> run_strata;
        for (auto& s : strata) {
            if (s.run_id != rq.id) continue;
            run_strata.push_back(&s);
            decile_quotas.push_back(
                Quota{s.decile, static_cast<int>(s.members.size()), 0, 0.0});
        }
        if (run_strata.empty()) continue;
        largest_remainder(decile_quotas, rq.alloc);
        for (std::size_t i = 0; i < run_strata.size(); ++i) {
            run_strata[i]->alloc = decile_quotas[i].alloc;
        }
    }

    // Every surviving run keeps at least one slice.
    std::map<std::int64_t, int> per_run;
    for (const auto& s : strata) per_run[s.run_id] += s.alloc;
    for (auto& [run_id, count] : per_run) {
        if (count > 0) continue;
        // Give this run one slot from its largest stratum, taking one from the
        // stratum with the largest allocation elsewhere.
        Stratum* give = nullptr;
        for (auto& s : strata) {
            if (s.run_id == run_id &&
                (!give || s.members.size() > give->members.size())) {
                give = &s;
            }
        }
        Stratum* take = nullptr;
        for (auto& s : strata) {
            if (per_run[s.run_id] > 1 && s.alloc > 0 &&
                (!take || s.alloc > take->alloc)) {
                take = &s;
            }
        }
        if (give && take) {
            ++give->alloc;
            --take->alloc;
            ++count;
            --per_run[take->run_id];
        }
    }

    // Within-stratum seeded shuffle, then emit in (run, slice) order.
    std::vector<const SliceKeySet*> out;
    out.reserve(static_cast<std::size_t>(size_cap));
    for (auto& s : strata) {
        std::mt19937_64 rng(stratum_seed(seed, s.run_id, s.decile));
        std::shuffle(s.members.begin(), s.members.end(), rng);
        s.members.resize(static_cast<std::size_t>(s.alloc));
        out.insert(out.end(), s.members.begin(), s.members.end());
    }
    std::sort(out.begin(), out.end(), [](const SliceKeySet* a, const SliceKeySet* b) {
        return std::pair(a->run_id, a->slice_index) < std::pair(b->run_id, b->slice_index);
    });
    return out;
}

namespace {

// Selects the k best candidates from (distance, index) pairs; ties prefer the
// smaller index, which is lexicographic (run_id, slice_index) order.
std::vector<int> select_k(std::vector<std::pair<double, int>>& cand, int k) {
    auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
    };
    if (static_cast<int>(cand.size()) > k) {
        std::nth_element(cand.begin(), cand.begin() + k, cand.end(), cmp);
        cand.resize(static_cast<std::size_t>(k));
    }
    std::sort(cand.begin(), cand.end(), cmp);
    std::vector<int> out;
    out.reserve(cand.size());
    for (const auto& [d, j] : cand) out.push_back(j);
    return out;
}

}  // namespace

std::vector<std::vector<int>> knn_candidates_serial(
    const std::vector<const SliceKeySet*>& slices, int k, Metric metric) {
    const int n = static_cast<int>(slices.size());
    std::vector<std::vector<int>> result(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> cand;
        cand.reserve(static_cast<std::size_t>(n - 1));
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.emplace_back(set_distance(*slices[static_cast<std::size_t>(i)],
                                           *slices[static_cast<std::size_t>(j)], metric),
                              j);
        }
        result[static_cast<std::size_t>(i)] = select_k(cand, k);
    }
    return result;
}

std::vector<std::vector<int>> knn_candidates_parallel(
    const std::vector<const SliceKeySet*>& slices, int k, Metric metric) {
    const int n = static_cast<int>(slices.size());
    std::vector<std::vector<int>> result(static_cast<std::size_t>(n));

    // Inverted index: compact key id -> nodes containing the key.
    std::unordered_map<NeuronKey, int> key_id;
    key_id.reserve(slices.empty() ? 1 : slices.size() * slices[0]->keys.size() / 4);
    std::vector<std::vector<int>> postings;
    for (int i = 0; i < n; ++i) {
        for (NeuronKey key : slices[static_cast<std::size_t>(i)]->keys) {
            auto [it, inserted] = key_id.try_emplace(key, static_cast<int>(postings.size()));
            if (inserted) postings.emplace_back();
            postings[static_cast<std::size_t>(it->second)].push_back(i);
        }
    }
    std::vector<std::vector<int>> node_keys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& nk = node_keys[static_cast<std::size_t>(i)];
        nk.reserve(slices[static_cast<std::size_t>(i)]->keys.size());
        for (NeuronKey key : slices[static_cast<std::size_t>(i)]->keys) {
            nk.push_back(key_id[key]);
        }
    }

#pragma omp parallel
    {
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(n), 0);
        std::vector<int> touched;
        touched.reserve(static_cast<std::size_t>(n));
#pragma omp for schedule(dynamic, 16)
        for (int i = 0; i < n; ++i) {
            touched.clear();
            for (int kid : node_keys[static_cast<std::size_t>(i)]) {
                for (int j : postings[static_cast<std::size_t>(kid)]) {
                    if (j == i) continue;
                    if (counts[static_cast<std::size_t>(j)]++ == 0) touched.push_back(j);
                }
            }
            std::vector<std::pair<double, int>> cand;
            cand.reserve(touched.size());
            const std::size_t si = slices[static_cast<std::size_t>(i)]->keys.size();
            for (int j : touched) {
                const std::size_t inter = counts[static_cast<std::size_t>(j)];
                cand.emplace_back(
                    distance_from_counts(inter, si,
                                         slices[static_cast<std::size_t>(j)]->keys.size(),
                                         metric),
                    j);
                counts[static_cast<std::size_t>(j)] = 0;
            }
            // Disjoint pairs all sit at distance 1; fill from index order if
            // fewer than k nodes share any key with i.
            if (static_cast<int>(cand.size()) < k && static_cast<int>(cand.size()) < n - 1) {
                std::vector<char> seen(static_cast<std::size_t>(n), 0);
                seen[static_cast<std::size_t>(i)] = 1;
                for (const auto& [d, j] : cand) seen[static_cast<std::size_t>(j)] = 1;
                for (int j = 0; j < n && static_cast<int>(cand.size()) < k; ++j) {
                    if (!seen[static_cast<std::size_t>(j)]) cand.emplace_back(1.0, j);
                }
            }
            result[static_cast<std::size_t>(i)] = select_k(cand, k);
        }
    }
    return result;
}

SliceGraph build_graph(const CellCache& cell, const AggregationConfig& config,
                       Metric metric, std::uint64_t seed) {
    config.validate();
    SliceGraph g;
    g.metric = metric;
    g.config = config;
    g.slices = cap_slices(cell, config.size_cap, seed);
    if (g.slices.size() < 2) {
        throw ValidationError("degenerate cell: fewer than 2 admitted slices");
    }
    g.nodes.reserve(g.slices.size());
    for (const auto* s : g.slices) g.nodes.push_back(NodeId{s->run_id, s->slice_index});

    const auto cand = knn_candidates_parallel(g.slices, config.k_neighbors, metric);

    std::vector<std::vector<char>> in_cand(g.slices.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
        in_cand[i].assign(g.slices.size(), 0);
        for (int j : cand[i]) in_cand[i][static_cast<std::size_t>(j)] = 1;
    }
    for (std::size_t i = 0; i < cand.size(); ++i) {
        for (int j : cand[i]) {
            const std::size_t sj = static_cast<std::size_t>(j);
            if (static_cast<std::size_t>(j) <= i) continue;
            if (!in_cand[sj][i]) continue;  // mutuality filter
            const double d = set_distance(*g.slices[i], *g.slices[sj], metric);
            const double w = std::exp(-(d / config.sigma) * (d / config.sigma));
            g.edges.push_back(Edge{static_cast<int>(i), j, d, w});
        }
    }
    return g;
}

std::uint64_t config_hash(const AggregationConfig& c, Metric metric) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(static_cast<std::uint64_t>(c.slice_size));
    mix(static_cast<std::uint64_t>(c.sep_up));
    mix(static_cast<std::uint64_t>(c.global_topk));
    mix(static_cast<std::uint64_t>(c.slice_topk));
    mix(static_cast<std::uint64_t>(c.k_neighbors));
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(double));
    std::memcpy(&bits, &c.sigma, sizeof(bits));
    mix(bits);
    mix(static_cast<std::uint64_t>(c.size_cap));
    mix(static_cast<std::uint64_t>(metric));
    return h;
}

std::string graph_to_json(const SliceGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        nodes.push_back(json{{"run_id", n.run_id}, {"slice_index", n.slice_index}});
    }
    json edges = json::array();
    for (const auto& e : g.edges) {
        edges.push_back(json{{"a", e.a}, {"b", e.b},
                             {"distance", e.distance}, {"weight", e.weight}});
    }
    std::ostringstream hash;
    hash << std::hex << config_hash(g.config, g.metric);
    return json{{"metric", metric_name(g.metric)},
                {"config_hash", hash.str()},
                {"nodes", nodes},
                {"edges", edges}}
        .dump(2);
}

std::string graph_to_dot(const SliceGraph& g) {
    std::ostringstream os;
    os << "graph slicegraph {\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        os << "  n" << i << " [label=\"r" << g.nodes[i].run_id << "s"
           << g.nodes[i].slice_index << "\"];\n";
    }
    for (const auto& e : g.edges) {
        os << "  n" << e.a << " -- n" << e.b << " [weight=" << e.weight << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace slicegraph
