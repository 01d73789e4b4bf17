#include "slicegraph/families.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "slicegraph/louvain.hpp"

namespace slicegraph {

std::map<std::int64_t, RunFootprint> compute_footprints(const SliceGraph& graph,
                                                        const BlockAtlas& atlas,
                                                        bool include_bridges) {
    std::map<std::int64_t, RunFootprint> footprints;
    for (const auto& node : graph.nodes) {
        auto& fp = footprints[node.run_id];
        fp.run_id = node.run_id;
    }
    for (const auto& b : atlas.blocks) {
        if (b.is_trivial && !include_bridges) continue;
        for (int v : b.node_ids) {
            footprints[graph.nodes[static_cast<std::size_t>(v)].run_id].blocks.insert(b.block_id);
        }
    }
    return footprints;
}

std::map<int, double> coverage_weights(const BlockAtlas& atlas, bool include_bridges) {
    std::map<int, double> w;
    for (const auto& b : atlas.blocks) {
        if (b.is_trivial && !include_bridges) continue;
        w[b.block_id] = 1.0 / std::max(b.coverage, 0.01);
    }
    return w;
}

double run_similarity(const RunFootprint& a, const RunFootprint& b,
                      const std::map<int, double>& weights) {
    double inter = 0.0, uni = 0.0;
    auto ia = a.blocks.begin();
    auto ib = b.blocks.begin();
    while (ia != a.blocks.end() || ib != b.blocks.end()) {
        int blk;
        bool in_both = false;
        if (ib == b.blocks.end() || (ia != a.blocks.end() && *ia < *ib)) {
            blk = *ia++;
        } else if (ia == a.blocks.end() || *ib < *ia) {
            blk = *ib++;
        } else {
            blk = *ia;
            in_both = true;
            ++ia;
            ++ib;
        }
        auto it = weights.find(blk);
        const double w = it != weights.end() ? it->second : 0.0;
        uni += w;
        if (in_both) inter += w;
    }
    return uni > 0.0 ? inter / uni : 0.0;
}

FamilyPartition detect_families_from(const std::vector<RunFootprint>& correct_footprints,
                                     const std::map<int, double>& weights,
                                     const FamilyConfig& config) {
    FamilyPartition part;
    part.edge_threshold = config.edge_threshold;
    part.resolution = config.resolution;
    part.seed = config.seed;
    part.block_weight = weights;

    std::vector<const RunFootprint*> nodes;
    for (const auto& fp : correct_footprints) {
        if (!fp.blocks.empty()) nodes.push_back(&fp);
    }
    // Stable node ordering feeds Louvain.
    std::sort(nodes.begin(), nodes.end(), [](const RunFootprint* a, const RunFootprint* b) {
        return a->run_id < b->run_id;
    });
    if (nodes.empty()) return part;

    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            const double sim = run_similarity(*nodes[i], *nodes[j], weights);
            if (sim >= config.edge_threshold) {
                edges.emplace_back(static_cast<int>(i), static_cast<int>(j), sim);
            }
        }
    }
    const std::vector<int> community = louvain_communities(
        static_cast<int>(nodes.size()), edges, config.resolution, config.seed);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        part.family_of[nodes[i]->run_id] = community[i];
    }
    part.family_count = community.empty() ? 0 : 1 + *std::max_element(community.begin(), community.end());
    part.multi_family = part.family_count >= 2;
    return part;
}

FamilyPartition detect_families(const CellCache& cell, const SliceGraph& graph,
                                const BlockAtlas& atlas, const FamilyConfig& config,
                                bool include_bridges) {
    const auto footprints = compute_footprints(graph, atlas, include_bridges);
    const auto weights = coverage_weights(atlas, include_bridges);
    std::vector<RunFootprint> correct;
    for (const auto& run : cell.runs) {
        if (!run.correct) continue;
        auto it = footprints.find(run.run_id);
        if (it != footprints.end()) correct.push_back(it->second);
    }
    return detect_families_from(correct, weights, config);
}

double cell_isomer_rate(const FamilyPartition& partition) {
    const std::size_t n = partition.family_of.size();
    if (n < 2) return -1.0;
    long cross = 0, total = 0;
    for (auto it = partition.family_of.begin(); it != partition.family_of.end(); ++it) {
        auto jt = it;
        for (++jt; jt != partition.family_of.end(); ++jt) {
            ++total;
            if (it->second != jt->second) ++cross;
        }
    }
    return static_cast<double>(cross) / static_cast<double>(total);
}

IsomerStats isomer_stats(const std::vector<FamilyPartition>& partitions) {
    IsomerStats stats;
    double rate_sum = 0.0, family_sum = 0.0;
    int multi = 0;
    for (const auto& part : partitions) {
        const double rate = cell_isomer_rate(part);
        if (rate < 0.0) continue;  // < 2 correct runs: cell skipped
        const long n = static_cast<long>(part.family_of.size());
        stats.per_cell_rates.push_back(rate);
        stats.per_cell_pair_counts.push_back(n * (n - 1) / 2);
        rate_sum += rate;
        family_sum += part.family_count;
        if (part.multi_family) ++multi;
        ++stats.eligible_cells;
    }
    if (stats.eligible_cells > 0) {
        stats.pairwise_isomer_rate = rate_sum / stats.eligible_cells;
        stats.multi_family_rate = static_cast<double>(multi) / stats.eligible_cells;
        stats.mean_family_count = family_sum / stats.eligible_cells;
    }
    return stats;
}

SplitHalfResult split_half_stability(const CellCache& cell, const SliceGraph& graph,
                                     const BlockAtlas& atlas, const FamilyConfig& config) {
    SplitHalfResult result;
    const auto footprints = compute_footprints(graph, atlas);
    const auto weights = coverage_weights(atlas);

    std::vector<RunFootprint> half[2];
    for (const auto& run : cell.runs) {
        if (!run.correct) continue;
        auto it = footprints.find(run.run_id);
        if (it == footprints.end() || it->second.blocks.empty()) continue;
        half[run.run_id % 2 == 0 ? 0 : 1].push_back(it->second);
    }
    if (half[0].size() < 2 || half[1].size() < 2) return result;  // ineligible

    result.eligible = true;
    bool both_multi = true;
    for (int h = 0; h < 2; ++h) {
        const FamilyPartition part = detect_families_from(half[h], weights, config);
        result.family_count[h] = part.family_count;
        result.isomer_rate[h] = cell_isomer_rate(part);
        both_multi = both_multi && part.multi_family;
    }
    result.both_halves_multi_family = both_multi;
    return result;
}

CellCache subset_cell(const CellCache& cell, const std::set<std::int64_t>& run_ids) {
    CellCache out;
    out.cell_id = cell.cell_id;
    out.config = cell.config;
    for (const auto& run : cell.runs) {
        if (run_ids.count(run.run_id)) out.runs.push_back(run);
    }
    for (auto& run : out.runs) {
        for (auto& s : run.slices) s.run_id = run.run_id;
    }
    return out;
}

HeldoutResult heldout_projection(const CellCache& cell, const AggregationConfig& config,
                                 Metric metric, int splits, std::uint64_t seed,
                                 const FamilyConfig& family_config,
                                 const RoleThresholds& thresholds) {
    HeldoutResult result;
    int correct_runs = 0;
    for (const auto& run : cell.runs) correct_runs += run.correct ? 1 : 0;
    if (correct_runs < 4 || cell.runs.size() < 2) return result;
    result.eligible = true;

    // Full-sample reference partition for the NMI readout.
    const SliceGraph full_graph = build_graph(cell, config, metric, seed);
    const BlockAtlas full_atlas = build_atlas(full_graph, cell, thresholds);
    const FamilyPartition full_part = detect_families(cell, full_graph, full_atlas, family_config);

    std::vector<std::int64_t> all_runs;
    for (const auto& run : cell.runs) all_runs.push_back(run.run_id);

    int valid_splits = 0;
    double coverage_sum = 0.0, multi_sum = 0.0, rate_sum = 0.0, nmi_sum = 0.0;
    for (int split = 0; split < splits; ++split) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(split) + 1);
        std::vector<std::int64_t> shuffled = all_runs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const std::size_t n_train = shuffled.size() / 2;
        std::set<std::int64_t> train(shuffled.begin(), shuffled.begin() + static_cast<long>(n_train));

        const CellCache train_cell = subset_cell(cell, train);
        if (train_cell.total_slices() < 2) continue;
        SliceGraph train_graph;
        try {
            train_graph = build_graph(train_cell, config, metric, seed);
        } catch (const ValidationError&) {
            continue;
        }
        const BlockAtlas train_atlas = build_atlas(train_graph, train_cell, thresholds);
        const auto train_weights = coverage_weights(train_atlas);

        // Project each held-out slice onto its nearest train slice's primary
        // block; the nearest neighbor always exists.
        std::map<std::int64_t, RunFootprint> heldout_fp;
        std::size_t heldout_slices = 0, covered = 0;
        for (const auto& run : cell.runs) {
            if (train.count(run.run_id)) continue;
            auto& fp = heldout_fp[run.run_id];
            fp.run_id = run.run_id;
            for (const auto& s : run.slices) {
                ++heldout_slices;
                int best = -1;
                double best_d = 2.0;
                for (std::size_t j = 0; j < train_graph.slices.size(); ++j) {
                    const double d = set_distance(s, *train_graph.slices[j], metric);
                    if (d < best_d) {
                        best_d = d;
                        best = static_cast<int>(j);
                    }
                }
                auto it = train_atlas.primary_block.find(best);
                if (it != train_atlas.primary_block.end()) {
                    ++covered;
                    fp.blocks.insert(it->second);
                }
            }
        }
        std::vector<RunFootprint> heldout_correct;
        for (const auto& run : cell.runs) {
            if (train.count(run.run_id) || !run.correct) continue;
            heldout_correct.push_back(heldout_fp[run.run_id]);
        }
        const FamilyPartition part = detect_families_from(heldout_correct, train_weights, family_config);

        coverage_sum += heldout_slices > 0
                            ? static_cast<double>(covered) / static_cast<double>(heldout_slices)
                            : 0.0;
        multi_sum += part.multi_family ? 1.0 : 0.0;
        const double rate = cell_isomer_rate(part);
        rate_sum += rate > 0.0 ? rate : 0.0;

        std::vector<int> labels_full, labels_heldout;
        for (const auto& [run_id, fam] : part.family_of) {
            auto it = full_part.family_of.find(run_id);
            if (it == full_part.family_of.end()) continue;
            labels_heldout.push_back(fam);
            labels_full.push_back(it->second);
        }
        if (!labels_full.empty()) {
            nmi_sum += normalized_mutual_information(labels_full, labels_heldout);
        }
        ++valid_splits;
    }
    if (valid_splits > 0) {
        result.block_coverage = coverage_sum / valid_splits;
        result.multi_family_rate = multi_sum / valid_splits;
        result.isomer_rate = rate_sum / valid_splits;
        result.nmi_vs_full = nmi_sum / valid_splits;
    }
    return result;
}

ControlledIsomerRow controlled_isomer_rate(
    const std::vector<std::vector<RunFootprint>>& per_cell_correct_footprints,
    const std::vector<std::map<int, double>>& per_cell_weights, int m, int replicates,
    std::uint64_t seed, const FamilyConfig& config) {
    ControlledIsomerRow row;
    row.m = m;
    double rate_sum = 0.0, multi_sum = 0.0, family_sum = 0.0;
    for (std::size_t c = 0; c < per_cell_correct_footprints.size(); ++c) {
        std::vector<RunFootprint> eligible;
        for (const auto& fp : per_cell_correct_footprints[c]) {
            if (!fp.blocks.empty()) eligible.push_back(fp);
        }
        if (static_cast<int>(eligible.size()) < m) continue;
        std::sort(eligible.begin(), eligible.end(), [](const RunFootprint& a, const RunFootprint& b) {
            return a.run_id < b.run_id;
        });
        double cell_rate = 0.0, cell_multi = 0.0, cell_families = 0.0;
        for (int rep = 0; rep < replicates; ++rep) {
            std::mt19937_64 rng(seed + static_cast<std::uint64_t>(rep));
            std::vector<RunFootprint> sample = eligible;
            std::shuffle(sample.begin(), sample.end(), rng);
            sample.resize(static_cast<std::size_t>(m));
            const FamilyPartition part = detect_families_from(sample, per_cell_weights[c], config);
            const double rate = cell_isomer_rate(part);
            cell_rate += rate > 0.0 ? rate : 0.0;
            cell_multi += part.multi_family ? 1.0 : 0.0;
            cell_families += part.family_count;
        }
        rate_sum += cell_rate / replicates;
        multi_sum += cell_multi / replicates;
        family_sum += cell_families / replicates;
        ++row.eligible_cells;
    }
    if (row.eligible_cells > 0) {
        row.mean_isomer_rate = rate_sum / row.eligible_cells;
        row.multi_family_rate = multi_sum / row.eligible_cells;
        row.mean_family_count = family_sum / row.eligible_cells;
    }
    return row;
}

namespace {

struct Contingency {
    std::vector<std::vector<long>> table;
    std::vector<long> row_sums, col_sums;
    long n = 0;
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
    Contingency c;
    if (a.size() != b.size()) throw ValidationError("label vectors differ in length");
    const int ka = a.empty() ? 0 : 1 + *std::max_element(a.begin(), a.end());
    const int kb = b.empty() ? 0 : 1 + *std::max_element(b.begin(), b.end());
    c.table.assign(static_cast<std::size_t>(ka), std::vector<long>(static_cast<std::size_t>(kb), 0));
    c.row_sums.assign(static_cast<std::size_t>(ka), 0);
    c.col_sums.assign(static_cast<std::size_t>(kb), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++c.table[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
        ++c.row_sums[static_cast<std::size_t>(a[i])];
        ++c.col_sums[static_cast<std::size_t>(b[i])];
        ++c.n;
    }
    return c;
}

double choose2(long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    const Contingency c = contingency(a, b);
    if (c.n < 2) return 1.0;
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& row : c.table) {
        for (long v : row) sum_ij += choose2(v);
    }
    for (long v : c.row_sums) sum_a += choose2(v);
    for (long v : c.col_sums) sum_b += choose2(v);
    const double total = choose2(c.n);
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (sum_ij - expected) / (max_index - expected);
}

double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    const Contingency c = contingency(a, b);
    if (c.n == 0) return 1.0;
    const double n = static_cast<double>(c.n);
    double mi = 0.0, ha = 0.0, hb = 0.0;
    for (std::size_t i = 0; i < c.table.size(); ++i) {
        for (std::size_t j = 0; j < c.table[i].size(); ++j) {
            const long nij = c.table[i][j];
            if (nij == 0) continue;
            mi += nij / n * std::log(nij * n / (static_cast<double>(c.row_sums[i]) * c.col_sums[j]));
        }
    }
    for (long v : c.row_sums) {
        if (v > 0) ha -= v / n * std::log(v / n);
    }
    for (long v : c.col_sums) {
        if (v > 0) hb -= v / n * std::log(v / n);
    }
    const double denom = 0.5 * (ha + hb);
    if (denom == 0.0) return 1.0;  // both labelings constant
    return mi / denom;
}

}  // namespace slicegraph
