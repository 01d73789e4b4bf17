#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "slicegraph/config.hpp"
#include "slicegraph/graph.hpp"

namespace slicegraph {

enum class BlockRole { shared_trunk, answer_basin, weak_basin, decision_point, intermediate, unassigned };

std::string role_name(BlockRole r);

struct Block {
    int block_id = 0;
    std::vector<int> node_ids;  // sorted node indices into the graph
    bool is_trivial = false;    // K2 bridge
    double coverage = 0.0;      // fraction of cell runs visiting the block
    double purity = 0.0;        // modal-answer fraction among visiting runs
    int n_runs = 0;             // unique visiting runs
    double medpos = 0.0;        // median normalized position of member slices
    double minpos = 0.0;        // earliest member position (primary-block tie-break)
    BlockRole role = BlockRole::unassigned;

    int size() const { return static_cast<int>(node_ids.size()); }
};

struct BlockAtlas {
    std::vector<Block> blocks;                 // edge partition of the graph
    std::set<int> articulation_points;         // node indices
    std::vector<std::pair<int, int>> block_cut_edges;  // non-trivial blocks sharing an articulation point
    std::map<int, int> primary_block;          // node index -> block_id (non-trivial only)

    std::vector<int> nontrivial_block_ids() const;
    const Block& block(int block_id) const { return blocks[static_cast<std::size_t>(block_id)]; }
};

/// Hopcroft–Tarjan lowpoint decomposition, run per connected component.
/// Disconnected components are all retained; K2 bridges are flagged trivial.
/// Isolated nodes belong to no block.
BlockAtlas decompose(const SliceGraph& graph);

/// Per-block stats + five-role assignment, first matching clause wins:
/// shared_trunk, answer_basin, weak_basin, decision_point, intermediate.
void assign_roles(BlockAtlas& atlas, const SliceGraph& graph, const CellCache& cell,
                  const RoleThresholds& thresholds = {});

/// Resolves each covered slice's primary non-trivial block: largest size,
/// then larger n_runs, then earlier minimum position, then smaller block id.
void resolve_primary_blocks(BlockAtlas& atlas, const SliceGraph& graph);

/// decompose + assign_roles + resolve_primary_blocks.
BlockAtlas build_atlas(const SliceGraph& graph, const CellCache& cell,
                       const RoleThresholds& thresholds = {});

/// Normalized position of a slice within its run: index / max(1, len - 1).
double normalized_position(int slice_index, int run_slice_count);

std::string atlas_to_json(const BlockAtlas& atlas, const SliceGraph& graph);

}  // namespace slicegraph
