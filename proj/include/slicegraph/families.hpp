#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "slicegraph/atlas.hpp"
#include "slicegraph/cache.hpp"
#include "slicegraph/config.hpp"

namespace slicegraph {

/// Non-trivial blocks a run visits across all slices; repeated visits
/// collapse.
struct RunFootprint {
    std::int64_t run_id = 0;
    std::set<int> blocks;
};

/// Correct-run Louvain communities on the weighted-Jaccard co-visitation
/// graph.  Only correct runs with non-empty footprints are partition nodes;
/// block weights come from full-cell coverage.
struct FamilyPartition {
    std::map<std::int64_t, int> family_of;  // correct run -> family id
    std::map<int, double> block_weight;     // omega_b = 1 / max(c_b, 0.01)
    double edge_threshold = 0.05;
    double resolution = 1.0;
    std::uint64_t seed = 42;
    int family_count = 0;
    bool multi_family = false;
};

struct IsomerStats {
    double pairwise_isomer_rate = 0.0;  // unweighted mean over eligible cells
    double multi_family_rate = 0.0;
    double mean_family_count = 0.0;
    int eligible_cells = 0;
    std::vector<double> per_cell_rates;
    std::vector<long> per_cell_pair_counts;
};

/// Per-run footprints over (by default) non-trivial blocks.  With
/// include_bridges, trivial K2 blocks join the footprints; the decomposition
/// itself is unchanged.
std::map<std::int64_t, RunFootprint> compute_footprints(const SliceGraph& graph,
                                                        const BlockAtlas& atlas,
                                                        bool include_bridges = false);

/// Rare-block upweights from full-cell block coverage.
std::map<int, double> coverage_weights(const BlockAtlas& atlas, bool include_bridges = false);

/// Weighted Jaccard J(r, r') over block footprints; both-empty pairs return 0.
double run_similarity(const RunFootprint& a, const RunFootprint& b,
                      const std::map<int, double>& weights);

/// Louvain partition of the given correct-run footprints (non-empty ones);
/// singleton components become singleton families.
FamilyPartition detect_families_from(const std::vector<RunFootprint>& correct_footprints,
                                     const std::map<int, double>& weights,
                                     const FamilyConfig& config);

/// Convenience wrapper: footprints and coverage weights from the cell's atlas.
FamilyPartition detect_families(const CellCache& cell, const SliceGraph& graph,
                                const BlockAtlas& atlas, const FamilyConfig& config = {},
                                bool include_bridges = false);

/// Per-cell pairwise isomer rate: cross-family pairs / all unordered pairs
/// among partition nodes.  Returns -1 for cells with < 2 partitioned runs.
double cell_isomer_rate(const FamilyPartition& partition);

/// Population roll-up over per-cell partitions; cells with < 2 partitioned
/// correct runs are skipped.
IsomerStats isomer_stats(const std::vector<FamilyPartition>& partitions);

struct SplitHalfResult {
    bool eligible = false;
    bool both_halves_multi_family = false;
    int family_count[2] = {0, 0};
    double isomer_rate[2] = {0.0, 0.0};
};

/// Fixed-scaffold split-half: even/odd run_id interleave, families re-detected
/// within each half's correct runs.  Requires >= 2 partitionable correct runs
/// per half.
SplitHalfResult split_half_stability(const CellCache& cell, const SliceGraph& graph,
                                     const BlockAtlas& atlas, const FamilyConfig& config = {});

struct HeldoutResult {
    bool eligible = false;
    double block_coverage = 0.0;   // held-out slices landing in non-trivial blocks
    double multi_family_rate = 0.0;
    double isomer_rate = 0.0;
    double nmi_vs_full = 0.0;      // against full-sample labels on held-out runs
};

/// Held-out atlas validation: per split, a graph and atlas are built on a
/// train half only; each held-out slice is assigned the primary block of its
/// nearest train slice; held-out correct-run families are computed on the
/// train scaffold.  Requires >= 4 correct runs.
HeldoutResult heldout_projection(const CellCache& cell, const AggregationConfig& config,
                                 Metric metric, int splits = 5, std::uint64_t seed = 0,
                                 const FamilyConfig& family_config = {},
                                 const RoleThresholds& thresholds = {});

struct ControlledIsomerRow {
    int m = 0;
    double mean_isomer_rate = 0.0;
    double multi_family_rate = 0.0;
    double mean_family_count = 0.0;
    int eligible_cells = 0;
};

/// Fixed-m controlled isomer rate on the fixed block scaffold: R seeded
/// subsamples of m correct runs per eligible cell, averaged over replicates
/// then cells.
ControlledIsomerRow controlled_isomer_rate(
    const std::vector<std::vector<RunFootprint>>& per_cell_correct_footprints,
    const std::vector<std::map<int, double>>& per_cell_weights, int m, int replicates,
    std::uint64_t seed, const FamilyConfig& config = {});

/// External clustering indices on matched label vectors.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);
/// Natural-log entropy, arithmetic-mean normalization.
double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b);

/// Sub-cell with only the named runs (counters reset).
CellCache subset_cell(const CellCache& cell, const std::set<std::int64_t>& run_ids);

}  // namespace slicegraph
