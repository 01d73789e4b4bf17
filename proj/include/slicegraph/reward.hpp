#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "slicegraph/atlas.hpp"
#include "slicegraph/cache.hpp"
#include "slicegraph/config.hpp"
#include "slicegraph/families.hpp"

namespace slicegraph {

/// Row-stochastic diffusion adjacency over non-trivial blocks: self-loops
/// plus binarized block-cut and symmetrized temporal edges.
struct DiffusionAdjacency {
    std::vector<int> block_ids;            // non-trivial block ids, node order
    std::map<int, int> index_of;           // block id -> row index
    std::vector<std::vector<double>> rows; // row-stochastic matrix P
    std::vector<std::set<int>> neighbors;  // undirected E_BC + E_temp (indices)
};

struct RewardField {
    std::vector<double> seed;      // v(0) per block, atlas support gate applied
    std::vector<double> diffused;  // v(steps), l-inf normalized
    std::vector<double> raw;       // v(steps) before normalization
    double alpha = 0.65;
    int steps = 24;
};

struct HighValueCore {
    std::set<int> core_blocks;               // block ids, strictly positive top quartile
    std::vector<std::set<int>> components;   // block ids per component, size descending
    bool multi_core = false;
    double size_ratio_second_first = 0.0;
};

struct EligibilityFlags {
    bool reward_evaluable = false;
    bool core_eligible_multi_family = false;
    std::vector<std::string> reasons;
};

/// Per-block visitor sets from primary-block paths.
std::map<int, std::set<std::int64_t>> block_visitors(const SliceGraph& graph,
                                                     const BlockAtlas& atlas);

/// Support-shrunk excess success seed.  When leave_one_out is set, that run
/// is removed from both the block and cell denominators.
std::map<int, double> compute_seed(const CellCache& cell, const SliceGraph& graph,
                                   const BlockAtlas& atlas,
                                   std::optional<std::int64_t> leave_one_out = std::nullopt);

/// Variant with explicit per-run labels (used for family conditioning and
/// label-permutation nulls).
std::map<int, double> compute_seed_with_labels(const std::map<std::int64_t, double>& labels,
                                               const SliceGraph& graph, const BlockAtlas& atlas);

DiffusionAdjacency build_diffusion_adjacency(const BlockAtlas& atlas,
                                             const SliceGraph& graph);

/// v(t+1) = alpha v(0) + (1-alpha) P v(t), starting from v(0); final iterate
/// divided by max |v| unless all-zero.
RewardField diffuse(const std::map<int, double>& seed, const DiffusionAdjacency& adjacency,
                    double alpha = 0.65, int steps = 24);

/// Top quartile (inclusive, linear interpolation) of strictly positive field
/// values; components under the diffusion adjacency restricted to the core.
HighValueCore extract_cores(const RewardField& field, const DiffusionAdjacency& adjacency,
                            double quantile = 0.75);

/// Family-core footprint specialization over families with non-zero core
/// footprint; requires >= 2 core components.
std::optional<double> specialization(const FamilyPartition& partition,
                                     const std::map<std::int64_t, RunFootprint>& footprints,
                                     const HighValueCore& cores);

struct SharpnessResult {
    double raw_ratio = 0.0;         // max raw family field / max raw pooled field
    double normalized_ratio = 0.0;  // same ratio on l-inf normalized fields
};

/// Family-conditioned diffusion: labels outside the family zeroed, field
/// re-run, maxima compared against the pooled field.
std::optional<SharpnessResult> field_sharpness(const CellCache& cell, const SliceGraph& graph,
                                               const BlockAtlas& atlas,
                                               const DiffusionAdjacency& adjacency,
                                               const FamilyPartition& partition, int family,
                                               const RewardField& pooled,
                                               const RewardConfig& config = {});

struct CoverageLoss {
    double delta_max = 0.0;
    bool critical = false;  // delta_max > 0.10
    std::map<int, double> per_family_share;
};

/// Unique-coverage loss of the most coverage-critical family; undefined for
/// single-family cells.
std::optional<CoverageLoss> coverage_loss(const FamilyPartition& partition,
                                          const std::map<std::int64_t, RunFootprint>& footprints);

struct CoreDivergence {
    long eligible_pairs = 0;    // both runs visit >= 1 core component
    long divergent_pairs = 0;   // visited component sets disjoint
    double uplift = 0.0;        // rate(divergent or isomeric) - isomer rate
};

CoreDivergence core_divergence(const FamilyPartition& partition,
                               const std::map<std::int64_t, RunFootprint>& footprints,
                               const HighValueCore& cores);

/// Eligibility chain: reward_evaluable requires >= 3 correct and >= 3
/// non-correct runs, >= 2 non-trivial blocks, >= 1 seed-eligible block, and
/// non-empty positive support in the diffused field.
EligibilityFlags eligibility(const CellCache& cell, const SliceGraph& graph,
                             const BlockAtlas& atlas, const RewardField& field,
                             const HighValueCore& cores, const FamilyPartition& partition);

}  // namespace slicegraph
