#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"

using namespace sgtest;

namespace {

/// Independent brute-force candidate lists: k smallest distances, ties to the
/// lexicographically smaller (run_id, slice_index), i.e. the node index.
std::vector<std::vector<int>> brute_knn(const std::vector<const SliceKeySet*>& slices, int k,
                                        Metric metric) {
    const int n = static_cast<int>(slices.size());
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> d;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            d.push_back({set_distance(*slices[static_cast<std::size_t>(i)],
                                      *slices[static_cast<std::size_t>(j)], metric),
                         j});
        }
        std::sort(d.begin(), d.end());
        for (int t = 0; t < std::min<int>(k, static_cast<int>(d.size())); ++t) {
            out[static_cast<std::size_t>(i)].push_back(d[static_cast<std::size_t>(t)].second);
        }
        std::sort(out[static_cast<std::size_t>(i)].begin(),
                  out[static_cast<std::size_t>(i)].end());
    }
    return out;
}

std::vector<const SliceKeySet*> all_slices(const CellCache& cell) {
    std::vector<const SliceKeySet*> out;
    for (const auto& run : cell.runs) {
        for (const auto& s : run.slices) out.push_back(&s);
    }
    return out;
}

}  // namespace

TEST_CASE("set_distance identities and the hand example") {
    const SliceKeySet a = make_slice(0, 0, {1, 2, 3});
    const SliceKeySet b = make_slice(0, 1, {2, 3, 4});
    for (Metric m : {Metric::jaccard, Metric::cosine, Metric::overlap}) {
        CHECK(set_distance(a, a, m) == doctest::Approx(0.0));
        const SliceKeySet disjoint = make_slice(0, 2, {9, 10, 11});
        CHECK(set_distance(a, disjoint, m) == doctest::Approx(1.0));
    }
    CHECK(set_distance(a, b, Metric::jaccard) == doctest::Approx(0.5));
    CHECK(set_distance(a, b, Metric::cosine) == doctest::Approx(1.0 - 2.0 / 3.0));
    CHECK(set_distance(a, b, Metric::overlap) == doctest::Approx(1.0 - 2.0 / 3.0));
}

TEST_CASE("cap_slices is the identity under the cap") {
    std::vector<RunRecord> runs;
    for (int r = 0; r < 10; ++r) {
        std::vector<std::vector<NeuronKey>> slices;
        for (int s = 0; s < 10; ++s) slices.push_back({static_cast<NeuronKey>(100 * r + s + 1)});
        runs.push_back(make_run(r, true, "a", std::move(slices)));
    }
    const CellCache cell = make_cell(std::move(runs));
    CHECK(cap_slices(cell, 2600, 0).size() == 100);
}

TEST_CASE("cap_slices 64x50 at 2600 keeps proportional per-run counts") {
    std::vector<RunRecord> runs;
    for (int r = 0; r < 64; ++r) {
        std::vector<std::vector<NeuronKey>> slices;
        for (int s = 0; s < 50; ++s) {
            slices.push_back({static_cast<NeuronKey>(10000 * r + s + 1)});
        }
        runs.push_back(make_run(r, true, "a", std::move(slices)));
    }
    const CellCache cell = make_cell(std::move(runs));
    const auto kept = cap_slices(cell, 2600, 7);
    CHECK(kept.size() == 2600);
    std::map<std::int64_t, int> per_run;
    for (const auto* s : kept) ++per_run[s->run_id];
    // 2600/64 = 40.625: every run ends within +-1 of the rounded share.
    for (const auto& [run, count] : per_run) {
        CHECK(count >= 40);
        CHECK(count <= 42);
    }
    CHECK(per_run.size() == 64);
}

TEST_CASE("cap_slices one run of 5000 keeps 260 per decile") {
    std::vector<std::vector<NeuronKey>> slices;
    for (int s = 0; s < 5000; ++s) slices.push_back({static_cast<NeuronKey>(s + 1)});
    const CellCache cell = make_cell({make_run(0, true, "a", std::move(slices))});
    const auto kept = cap_slices(cell, 2600, 3);
    CHECK(kept.size() == 2600);
    std::map<int, int> per_decile;
    for (const auto* s : kept) ++per_decile[std::min(9, 10 * s->slice_index / 5000)];
    for (const auto& [decile, count] : per_decile) CHECK(count == 260);
    CHECK(per_decile.size() == 10);
}

TEST_CASE("build_graph: two identical slices at k=1 give one unit-weight edge") {
    AggregationConfig config;
    config.k_neighbors = 1;
    const CellCache cell = make_cell({make_run(0, true, "a", {{1, 2, 3}, {1, 2, 3}})});
    const SliceGraph g = build_graph(cell, config, Metric::jaccard);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].distance == doctest::Approx(0.0));
    CHECK(g.edges[0].weight == doctest::Approx(1.0));
}

TEST_CASE("build_graph drops non-mutual candidate pairs") {
    // A={1..6}, B shares 5 keys with A, C shares 2 keys with A and nothing
    // with B.  C's top-1 is A, but A's top-1 is B, so no A-C edge at k=1.
    AggregationConfig config;
    config.k_neighbors = 1;
    const CellCache cell = make_cell({
        make_run(0, true, "a", {{1, 2, 3, 4, 5, 6}}),   // A
        make_run(1, true, "a", {{1, 2, 3, 4, 5, 60}}),  // B
        make_run(2, true, "a", {{1, 2, 70, 71, 72, 73}}),  // C
    });
    const SliceGraph g = build_graph(cell, config, Metric::jaccard);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].a == 0);
    CHECK(g.edges[0].b == 1);
}

TEST_CASE("RBF weight at d = sigma is exp(-1)") {
    // Two 20-key sets with |intersection| = 13: d_J = 1 - 13/27 = 14/27.
    // Easier: check the exported weight formula on a constructed edge.
    AggregationConfig config;
    config.k_neighbors = 1;
    config.sigma = 0.35;
    // d = 0.35 exactly: |A|=|B|=20 with |A inter B| = 13 gives 1-13/27; use
    // overlap metric instead: 1 - inter/min = 0.35 with inter=13, min=20.
    std::vector<NeuronKey> a, b;
    for (NeuronKey k = 1; k <= 20; ++k) a.push_back(k);
    for (NeuronKey k = 8; k <= 27; ++k) b.push_back(k);  // shares 8..20 = 13 keys
    const CellCache cell = make_cell({make_run(0, true, "a", {std::vector<NeuronKey>(a)}),
                                      make_run(1, true, "a", {std::vector<NeuronKey>(b)})});
    const SliceGraph g = build_graph(cell, config, Metric::overlap);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].distance == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(g.edges[0].weight == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("build_graph rejects degenerate cells") {
    AggregationConfig config;
    const CellCache cell = make_cell({make_run(0, true, "a", {{1, 2}})});
    CHECK_THROWS_AS(build_graph(cell, config, Metric::jaccard), ValidationError);
}

TEST_CASE("graph mutuality, degree bound, and kernel agreement on random cells") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const CellCache cell = random_cell(rng, 6, 8, 15, 120);
        AggregationConfig config;
        const SliceGraph g = build_graph(cell, config, Metric::jaccard);
        const auto slices = all_slices(cell);
        const auto oracle = brute_knn(slices, config.k_neighbors, Metric::jaccard);
        for (const auto& e : g.edges) {
            const auto& ca = oracle[static_cast<std::size_t>(e.a)];
            const auto& cb = oracle[static_cast<std::size_t>(e.b)];
            CHECK(std::binary_search(ca.begin(), ca.end(), e.b));
            CHECK(std::binary_search(cb.begin(), cb.end(), e.a));
        }
        CHECK(g.max_degree() <= config.k_neighbors);

        const auto serial = knn_candidates_serial(slices, config.k_neighbors, Metric::jaccard);
        const auto parallel =
            knn_candidates_parallel(slices, config.k_neighbors, Metric::jaccard);
        CHECK(serial == parallel);
    }
}

TEST_CASE("edge sets are identical across the sigma sweep") {
    std::mt19937_64 rng(23);
    const CellCache cell = random_cell(rng, 5, 8, 12, 90);
    AggregationConfig config;
    std::set<std::pair<int, int>> baseline;
    for (double sigma : {0.20, 0.35, 0.50}) {
        config.sigma = sigma;
        const SliceGraph g = build_graph(cell, config, Metric::jaccard);
        std::set<std::pair<int, int>> edges;
        for (const auto& e : g.edges) edges.insert({e.a, e.b});
        if (baseline.empty()) baseline = edges;
        CHECK(edges == baseline);
    }
}

TEST_CASE("weight is strictly decreasing in distance and bounded by (0,1]") {
    std::mt19937_64 rng(31);
    const CellCache cell = random_cell(rng, 5, 6, 12, 80);
    AggregationConfig config;
    const SliceGraph g = build_graph(cell, config, Metric::jaccard);
    for (const auto& e : g.edges) {
        CHECK(e.weight > 0.0);
        CHECK(e.weight <= 1.0);
        CHECK(e.weight ==
              doctest::Approx(std::exp(-(e.distance / config.sigma) *
                                       (e.distance / config.sigma))));
    }
    for (std::size_t i = 1; i < g.edges.size(); ++i) {
        if (g.edges[i].distance > g.edges[i - 1].distance) {
            CHECK(g.edges[i].weight < g.edges[i - 1].weight);
        }
    }
}

TEST_CASE("build_graph is deterministic for fixed cache, config, and seed") {
    std::mt19937_64 rng(47);
    const CellCache cell = random_cell(rng, 6, 7, 14, 100);
    AggregationConfig config;
    const SliceGraph a = build_graph(cell, config, Metric::jaccard, 5);
    const SliceGraph b = build_graph(cell, config, Metric::jaccard, 5);
    CHECK(graph_to_json(a) == graph_to_json(b));
}
