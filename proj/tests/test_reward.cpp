#include <doctest.h>

#include <cmath>

#include "slicegraph/pipeline.hpp"
#include "slicegraph/reward.hpp"
#include "slicegraph/synth.hpp"
#include "test_helpers.hpp"

using namespace sgtest;

namespace {

SliceGraph graph_with_nodes(const std::vector<std::pair<std::int64_t, int>>& nodes,
                            const std::vector<std::pair<int, int>>& edges) {
    SliceGraph g;
    for (const auto& [run, idx] : nodes) {
        NodeId node;
        node.run_id = run;
        node.slice_index = idx;
        g.nodes.push_back(node);
        g.slices.push_back(nullptr);
    }
    for (auto [a, b] : edges) {
        Edge e;
        e.a = std::min(a, b);
        e.b = std::max(a, b);
        e.distance = 0.2;
        e.weight = 0.9;
        g.edges.push_back(e);
    }
    return g;
}

CellCache cell_with_runs(
    const std::vector<std::tuple<std::int64_t, int, bool, std::string>>& runs) {
    std::vector<RunRecord> records;
    for (const auto& [id, len, correct, answer] : runs) {
        std::vector<std::vector<NeuronKey>> slices;
        for (int s = 0; s < len; ++s) {
            slices.push_back({static_cast<NeuronKey>(1000 * id + s + 1)});
        }
        records.push_back(make_run(id, correct, answer, std::move(slices)));
    }
    return make_cell(std::move(records));
}

DiffusionAdjacency adjacency_from(const std::vector<int>& block_ids,
                                  const std::vector<std::pair<int, int>>& links) {
    DiffusionAdjacency adj;
    adj.block_ids = block_ids;
    for (std::size_t i = 0; i < block_ids.size(); ++i) {
        adj.index_of[block_ids[i]] = static_cast<int>(i);
    }
    adj.neighbors.assign(block_ids.size(), {});
    for (auto [a, b] : links) {
        adj.neighbors[static_cast<std::size_t>(a)].insert(b);
        adj.neighbors[static_cast<std::size_t>(b)].insert(a);
    }
    adj.rows.assign(block_ids.size(), std::vector<double>(block_ids.size(), 0.0));
    for (std::size_t i = 0; i < block_ids.size(); ++i) {
        const double deg = 1.0 + static_cast<double>(adj.neighbors[i].size());
        adj.rows[i][i] = 1.0 / deg;
        for (int n : adj.neighbors[i]) adj.rows[i][static_cast<std::size_t>(n)] = 1.0 / deg;
    }
    return adj;
}

RewardField field_of(std::vector<double> values) {
    RewardField f;
    f.raw = values;
    f.diffused = std::move(values);
    return f;
}

}  // namespace

TEST_CASE("compute_seed matches the hand example and support gates") {
    // Block = 5-cycle over runs 0..4; runs 0..3 correct, run 4 wrong.
    // Cell has 10 runs with 5 correct: (0.8 - 0.5) * sqrt(0.5) = 0.2121.
    std::vector<std::pair<std::int64_t, int>> nodes;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 5; ++i) {
        nodes.push_back({i, 0});
        edges.push_back({i, (i + 1) % 5});
    }
    const SliceGraph g = graph_with_nodes(nodes, edges);
    const CellCache cell = cell_with_runs({{0, 1, true, "a"},
                                           {1, 1, true, "a"},
                                           {2, 1, true, "a"},
                                           {3, 1, true, "a"},
                                           {4, 1, false, ""},
                                           {5, 1, true, "a"},
                                           {6, 1, false, ""},
                                           {7, 1, false, ""},
                                           {8, 1, false, ""},
                                           {9, 1, false, ""}});
    const BlockAtlas atlas = build_atlas(g, cell);
    const auto seed = compute_seed(cell, g, atlas);
    REQUIRE(seed.size() == 1);
    CHECK(seed.begin()->second == doctest::Approx(0.3 * std::sqrt(0.5)).epsilon(1e-12));
    CHECK(seed.begin()->second == doctest::Approx(0.2121).epsilon(1e-3));
}

TEST_CASE("seed gate zeroes blocks visited by nearly all or nearly no runs") {
    // Ring over all 5 runs of a 5-run cell: n_b = n = 5 > n-3.
    std::vector<std::pair<std::int64_t, int>> nodes;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 5; ++i) {
        nodes.push_back({i, 0});
        edges.push_back({i, (i + 1) % 5});
    }
    const SliceGraph g = graph_with_nodes(nodes, edges);
    const CellCache cell = cell_with_runs({{0, 1, true, "a"},
                                           {1, 1, true, "a"},
                                           {2, 1, false, ""},
                                           {3, 1, false, ""},
                                           {4, 1, false, ""}});
    const BlockAtlas atlas = build_atlas(g, cell);
    const auto seed = compute_seed(cell, g, atlas);
    REQUIRE(seed.size() == 1);
    CHECK(seed.begin()->second == doctest::Approx(0.0));
}

TEST_CASE("diffusion adjacency of a 3-block temporal chain") {
    // Three triangles, one per slice position; each run walks b1 -> b2 -> b3.
    std::vector<std::pair<std::int64_t, int>> nodes;
    std::vector<std::pair<int, int>> edges;
    for (int s = 0; s < 3; ++s) {
        for (int r = 0; r < 3; ++r) nodes.push_back({r, s});
        const int base = 3 * s;
        edges.push_back({base, base + 1});
        edges.push_back({base + 1, base + 2});
        edges.push_back({base, base + 2});
    }
    // Node order interleaves by construction above: fix ordering run-major.
    // nodes currently: (0,0),(1,0),(2,0),(0,1),(1,1),(2,1),(0,2),(1,2),(2,2)
    const SliceGraph g = graph_with_nodes(nodes, edges);
    const CellCache cell =
        cell_with_runs({{0, 3, true, "a"}, {1, 3, true, "a"}, {2, 3, false, ""}});
    const BlockAtlas atlas = build_atlas(g, cell);
    REQUIRE(atlas.nontrivial_block_ids().size() == 3);
    const DiffusionAdjacency adj = build_diffusion_adjacency(atlas, g);
    REQUIRE(adj.rows.size() == 3);
    // Chain b1 - b2 - b3: rows (1/2,1/2,0), (1/3,1/3,1/3), (0,1/2,1/2) after
    // identifying the blocks with their slice positions.
    std::vector<int> by_pos(3, -1);  // position -> adjacency index
    for (std::size_t i = 0; i < adj.block_ids.size(); ++i) {
        const Block& b = atlas.block(adj.block_ids[i]);
        const int pos = g.nodes[static_cast<std::size_t>(b.node_ids[0])].slice_index;
        by_pos[static_cast<std::size_t>(pos)] = static_cast<int>(i);
    }
    const auto row = [&](int pos) { return adj.rows[static_cast<std::size_t>(by_pos[static_cast<std::size_t>(pos)])]; };
    const auto idx = [&](int pos) { return static_cast<std::size_t>(by_pos[static_cast<std::size_t>(pos)]); };
    CHECK(row(0)[idx(0)] == doctest::Approx(0.5));
    CHECK(row(0)[idx(1)] == doctest::Approx(0.5));
    CHECK(row(0)[idx(2)] == doctest::Approx(0.0));
    CHECK(row(1)[idx(0)] == doctest::Approx(1.0 / 3.0));
    CHECK(row(1)[idx(1)] == doctest::Approx(1.0 / 3.0));
    CHECK(row(1)[idx(2)] == doctest::Approx(1.0 / 3.0));
    CHECK(row(2)[idx(0)] == doctest::Approx(0.0));
    CHECK(row(2)[idx(1)] == doctest::Approx(0.5));
    CHECK(row(2)[idx(2)] == doctest::Approx(0.5));
}

TEST_CASE("adjacency rows always sum to one") {
    const DiffusionAdjacency adj = adjacency_from({0, 1, 2, 3}, {{0, 1}, {1, 2}});
    for (const auto& row : adj.rows) {
        double s = 0.0;
        for (double v : row) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("diffuse: single block is a fixed point; zero seed stays zero") {
    const DiffusionAdjacency single = adjacency_from({7}, {});
    const RewardField f = diffuse({{7, 0.4}}, single);
    CHECK(f.raw[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(f.diffused[0] == doctest::Approx(1.0).epsilon(1e-12));
    const RewardField z = diffuse({{7, 0.0}}, single);
    CHECK(z.raw[0] == doctest::Approx(0.0));
    CHECK(z.diffused[0] == doctest::Approx(0.0));
}

TEST_CASE("diffuse matches a dense matrix-power oracle and is linear") {
    const DiffusionAdjacency adj = adjacency_from({0, 1, 2, 3, 4},
                                                  {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
    const std::map<int, double> seed = {{0, 1.0}, {2, -0.5}, {4, 0.25}};
    const double alpha = 0.65;
    const int steps = 24;
    const RewardField f = diffuse(seed, adj, alpha, steps);

    // Independent dense evaluation: v <- alpha v0 + (1-alpha) P v, unrolled.
    std::vector<double> v0(5, 0.0);
    for (const auto& [b, s] : seed) v0[static_cast<std::size_t>(adj.index_of.at(b))] = s;
    std::vector<double> v = v0;
    for (int t = 0; t < steps; ++t) {
        std::vector<double> pv(5, 0.0);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) pv[i] += adj.rows[i][j] * v[j];
        }
        for (std::size_t i = 0; i < 5; ++i) v[i] = alpha * v0[i] + (1 - alpha) * pv[i];
    }
    for (std::size_t i = 0; i < 5; ++i) CHECK(f.raw[i] == doctest::Approx(v[i]).epsilon(1e-12));

    // Linearity pre-normalization: scaling the seed scales the raw field.
    std::map<int, double> seed3;
    for (const auto& [b, s] : seed) seed3[b] = 3.0 * s;
    const RewardField f3 = diffuse(seed3, adj, alpha, steps);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(f3.raw[i] == doctest::Approx(3.0 * f.raw[i]).epsilon(1e-10));
    }
}

TEST_CASE("extract_cores percentile rule on the 4-value example") {
    const DiffusionAdjacency adj = adjacency_from({0, 1, 2, 3}, {});
    const RewardField f = field_of({0.1, 0.2, 0.3, 0.4});
    const HighValueCore cores = extract_cores(f, adj, 0.75);
    // Inclusive linear interpolation: threshold 0.325, core = the 0.4 block.
    CHECK(cores.core_blocks == std::set<int>({3}));
    CHECK(cores.components.size() == 1);
    CHECK_FALSE(cores.multi_core);
}

TEST_CASE("extract_cores: disconnected equal cores give K=2, ratio 1") {
    const DiffusionAdjacency adj = adjacency_from({0, 1, 2}, {});
    const RewardField f = field_of({0.5, 0.5, -0.2});
    const HighValueCore cores = extract_cores(f, adj, 0.75);
    CHECK(cores.core_blocks == std::set<int>({0, 1}));
    CHECK(cores.components.size() == 2);
    CHECK(cores.multi_core);
    CHECK(cores.size_ratio_second_first == doctest::Approx(1.0));
}

TEST_CASE("core masks are invariant under positive field rescaling") {
    const DiffusionAdjacency adj =
        adjacency_from({0, 1, 2, 3, 4, 5}, {{0, 1}, {2, 3}, {4, 5}});
    const RewardField f = field_of({0.9, 0.1, 0.5, -0.3, 0.7, 0.2});
    RewardField scaled = f;
    for (auto& v : scaled.diffused) v *= 4.2;
    for (auto& v : scaled.raw) v *= 4.2;
    const HighValueCore a = extract_cores(f, adj, 0.75);
    const HighValueCore b = extract_cores(scaled, adj, 0.75);
    CHECK(a.core_blocks == b.core_blocks);
    CHECK(a.components == b.components);
}

TEST_CASE("specialization endpoints and the 0.1887 example") {
    HighValueCore cores;
    cores.components = {{1, 2, 3, 4}, {5, 6, 7, 8}};
    cores.core_blocks = {1, 2, 3, 4, 5, 6, 7, 8};
    FamilyPartition partition;
    partition.family_of = {{0, 0}, {1, 1}};
    partition.family_count = 2;

    std::map<std::int64_t, RunFootprint> exclusive;
    exclusive[0].run_id = 0;
    exclusive[0].blocks = {1, 2};
    exclusive[1].run_id = 1;
    exclusive[1].blocks = {5, 6};
    CHECK(*specialization(partition, exclusive, cores) == doctest::Approx(1.0));

    std::map<std::int64_t, RunFootprint> uniform;
    uniform[0].run_id = 0;
    uniform[0].blocks = {1, 2, 5, 6};
    uniform[1].run_id = 1;
    uniform[1].blocks = {3, 4, 7, 8};
    CHECK(*specialization(partition, uniform, cores) == doctest::Approx(0.0));

    // One family with footprint shares (0.75, 0.25) across K=2 components.
    FamilyPartition one;
    one.family_of = {{0, 0}};
    one.family_count = 1;
    std::map<std::int64_t, RunFootprint> skewed;
    skewed[0].run_id = 0;
    skewed[0].blocks = {1, 2, 3, 5};
    const double h = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    const double expect = 1.0 - h / std::log(2.0);
    CHECK(*specialization(one, skewed, cores) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.1887).epsilon(1e-3));
}

TEST_CASE("specialization undefined for K < 2") {
    HighValueCore cores;
    cores.components = {{1}};
    cores.core_blocks = {1};
    FamilyPartition partition;
    partition.family_of = {{0, 0}};
    std::map<std::int64_t, RunFootprint> fps;
    fps[0].blocks = {1};
    CHECK_FALSE(specialization(partition, fps, cores).has_value());
}

TEST_CASE("coverage loss endpoints") {
    FamilyPartition partition;
    partition.family_of = {{0, 0}, {1, 1}};
    partition.family_count = 2;
    std::map<std::int64_t, RunFootprint> disjoint;
    disjoint[0].blocks = {1, 2};
    disjoint[1].blocks = {3, 4};
    const auto loss = coverage_loss(partition, disjoint);
    REQUIRE(loss.has_value());
    CHECK(loss->delta_max == doctest::Approx(0.5));
    CHECK(loss->critical);

    std::map<std::int64_t, RunFootprint> identical;
    identical[0].blocks = {1, 2};
    identical[1].blocks = {1, 2};
    const auto zero = coverage_loss(partition, identical);
    REQUIRE(zero.has_value());
    CHECK(zero->delta_max == doctest::Approx(0.0));
    CHECK_FALSE(zero->critical);

    FamilyPartition single;
    single.family_of = {{0, 0}};
    single.family_count = 1;
    CHECK_FALSE(coverage_loss(single, identical).has_value());
}

TEST_CASE("core divergence eligibility and disjointness") {
    HighValueCore cores;
    cores.components = {{1}, {2}};
    cores.core_blocks = {1, 2};
    FamilyPartition partition;
    partition.family_of = {{0, 0}, {1, 0}, {2, 0}};
    partition.family_count = 1;
    std::map<std::int64_t, RunFootprint> fps;
    fps[0].blocks = {1};      // visits C1
    fps[1].blocks = {2};      // visits C2
    fps[2].blocks = {9};      // visits no core: ineligible in its pairs
    const CoreDivergence div = core_divergence(partition, fps, cores);
    CHECK(div.eligible_pairs == 1);
    CHECK(div.divergent_pairs == 1);

    fps[1].blocks = {1};  // both visit only C1: not divergent
    const CoreDivergence same = core_divergence(partition, fps, cores);
    CHECK(same.eligible_pairs == 1);
    CHECK(same.divergent_pairs == 0);
}

TEST_CASE("eligibility requires the 3-correct/3-incorrect gate") {
    PlantSpec spec;
    spec.n_runs = 16;
    spec.n_families = 2;
    spec.blocks_per_family = 2;
    spec.shared_trunk_blocks = 0;
    spec.slices_per_block = 3;
    spec.keys_per_slice = 80;
    spec.accuracy = {1.0, 0.25};
    spec.seed = 11;
    const auto [cell, truth] = generate_cell(spec);
    PipelineConfig config;
    const CellResult r = run_cell(cell, config);
    REQUIRE(r.ok);
    CHECK(r.flags.reward_evaluable);

    PlantSpec all_correct = spec;
    all_correct.accuracy = {1.0, 1.0};
    const auto [cell2, truth2] = generate_cell(all_correct);
    const CellResult r2 = run_cell(cell2, config);
    REQUIRE(r2.ok);
    CHECK_FALSE(r2.flags.reward_evaluable);
}

TEST_CASE("field sharpness is 1 when one family holds every correct run") {
    // Family 1 never answers correctly, so conditioning the labels on family 0
    // is the identity and both ratio conventions must equal 1.
    PlantSpec spec;
    spec.n_runs = 16;
    spec.n_families = 2;
    spec.blocks_per_family = 2;
    spec.shared_trunk_blocks = 0;
    spec.slices_per_block = 3;
    spec.keys_per_slice = 80;
    spec.accuracy = {1.0, 0.0};
    spec.seed = 3;
    const auto [cell, truth] = generate_cell(spec);
    PipelineConfig config;
    const CellResult r = run_cell(cell, config);
    REQUIRE(r.ok);
    REQUIRE(!r.partition.family_of.empty());
    const int family = r.partition.family_of.begin()->second;
    for (const auto& [run, f] : r.partition.family_of) CHECK(f == family);
    const auto sharp = field_sharpness(cell, r.graph, r.atlas, r.adjacency, r.partition,
                                       family, r.field);
    REQUIRE(sharp.has_value());
    CHECK(sharp->raw_ratio == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sharp->normalized_ratio == doctest::Approx(1.0).epsilon(1e-9));
}
