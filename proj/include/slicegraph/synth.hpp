#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slicegraph/atlas.hpp"
#include "slicegraph/cache.hpp"
#include "slicegraph/families.hpp"
#include "slicegraph/graph.hpp"
#include "slicegraph/reward.hpp"

namespace slicegraph {

/// Planted-cell generator spec.  Every run walks the shared trunk blocks and
/// then its family's blocks, slices_per_block consecutive slices each.
struct PlantSpec {
    int n_runs = 24;
    int n_families = 3;
    int blocks_per_family = 2;
    int shared_trunk_blocks = 1;
    int slices_per_block = 2;
    int keys_per_slice = 120;
    double key_overlap_within_block = 0.9;   // same-block slices share >= this fraction
    double key_overlap_across_blocks = 0.05; // cross-block slices share <= this fraction
    std::vector<double> accuracy;            // per family; empty -> all 1.0
    std::map<int, int> core_placement;       // family -> intended core component
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError on infeasible overlaps
};

struct GroundTruth {
    std::map<std::int64_t, int> family_of;                  // planted family per run
    std::map<std::int64_t, bool> label_of;                  // planted correctness
    std::map<std::pair<std::int64_t, int>, int> planted_block;  // (run, slice) -> block
    std::vector<int> trunk_blocks;                          // planted block ids
    std::map<int, std::vector<int>> family_blocks;          // family -> planted block ids
    std::map<int, int> core_placement;
    double isomer_rate() const;  // cross-family correct-pair share
};

/// Deterministic exact-overlap construction: per planted block a private base
/// pool plus a ring of positional pools, one global shared pool sized to the
/// cross-block target, and fresh unique keys filling each slice.
std::pair<CellCache, GroundTruth> generate_cell(const PlantSpec& spec);

std::string ground_truth_to_json(const GroundTruth& truth);

struct RecoveryScore {
    double family_ari = 0.0;
    double family_nmi = 0.0;
    double block_purity = 0.0;       // majority planted-block share per detected block
    double core_accuracy = 1.0;      // Jaccard of intended vs detected core families
    double isomer_rate_error = 0.0;  // |detected - planted|
    int matched_runs = 0;
};

RecoveryScore score_recovery(const SliceGraph& graph, const BlockAtlas& atlas,
                             const FamilyPartition& partition, const HighValueCore& cores,
                             const GroundTruth& truth);

}  // namespace slicegraph
