#include "slicegraph/atlas.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

namespace slicegraph {

using nlohmann::json;

std::string role_name(BlockRole r) {
    switch (r) {
        case BlockRole::shared_trunk: return "shared_trunk";
        case BlockRole::answer_basin: return "answer_basin";
        case BlockRole::weak_basin: return "weak_basin";
        case BlockRole::decision_point: return "decision_point";
        case BlockRole::intermediate: return "intermediate";
        case BlockRole::unassigned: return "unassigned";
    }
    return "unassigned";
}

double normalized_position(int slice_index, int run_slice_count) {
    return static_cast<double>(slice_index) /
           static_cast<double>(std::max(1, run_slice_count - 1));
}

std::vector<int> BlockAtlas::nontrivial_block_ids() const {
    std::vector<int> ids;
    for (const auto& b : blocks) {
        if (!b.is_trivial) ids.push_back(b.block_id);
    }
    return ids;
}

BlockAtlas decompose(const SliceGraph& graph) {
    BlockAtlas atlas;
    const int n = static_cast<int>(graph.nodes.size());
    if (n == 0) return atlas;
    const auto adj = graph.adjacency();

    std::vector<int> disc(static_cast<std::size_t>(n), -1);
    std::vector<int> low(static_cast<std::size_t>(n), 0);
    std::vector<std::pair<int, int>> edge_stack;
    int timer = 0;

    struct Frame {
        int node;
        int parent;
        std::size_t next_child = 0;
    };

    auto emit_block = [&](int u, int v) {
        std::set<int> members;
        while (!edge_stack.empty()) {
            auto [a, b] = edge_stack.back();
            edge_stack.pop_back();
            members.insert(a);
            members.insert(b);
            if ((a == u && b == v) || (a == v && b == u)) break;
        }
        Block blk;
        blk.block_id = static_cast<int>(atlas.blocks.size());
        blk.node_ids.assign(members.begin(), members.end());
        blk.is_trivial = blk.node_ids.size() == 2;
        atlas.blocks.push_back(std::move(blk));
    };

    for (int root = 0; root < n; ++root) {
        if (disc[static_cast<std::size_t>(root)] != -1) continue;
        if (adj[static_cast<std::size_t>(root)].empty()) {
            disc[static_cast<std::size_t>(root)] = timer++;
            continue;  // isolated node: no block
        }
        int root_children = 0;
        std::vector<Frame> stack;
        disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
        stack.push_back(Frame{root, -1});
        while (!stack.empty()) {
            Frame& f = stack.back();
            const auto& nbrs = adj[static_cast<std::size_t>(f.node)];
            if (f.next_child < nbrs.size()) {
                const int v = nbrs[f.next_child++];
                if (v == f.parent) continue;
                if (disc[static_cast<std::size_t>(v)] == -1) {
                    if (f.node == root) ++root_children;
                    edge_stack.emplace_back(f.node, v);
                    disc[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = timer++;
                    stack.push_back(Frame{v, f.node});
                } else if (disc[static_cast<std::size_t>(v)] < disc[static_cast<std::size_t>(f.node)]) {
                    edge_stack.emplace_back(f.node, v);
                    low[static_cast<std::size_t>(f.node)] =
                        std::min(low[static_cast<std::size_t>(f.node)],
                                 disc[static_cast<std::size_t>(v)]);
                }
            } else {
                const int u = f.node;
                const int p = f.parent;
                stack.pop_back();
                if (p != -1) {
                    low[static_cast<std::size_t>(p)] =
                        std::min(low[static_cast<std::size_t>(p)], low[static_cast<std::size_t>(u)]);
                    if (low[static_cast<std::size_t>(u)] >= disc[static_cast<std::size_t>(p)]) {
                        emit_block(p, u);
                        if (p != root) atlas.articulation_points.insert(p);
                    }
                }
            }
        }
        if (root_children >= 2) atlas.articulation_points.insert(root);
    }

    // Block-cut edges: non-trivial blocks sharing an articulation point.
    std::unordered_map<int, std::vector<int>> ap_blocks;
    for (const auto& b : atlas.blocks) {
        if (b.is_trivial) continue;
        for (int v : b.node_ids) {
            if (atlas.articulation_points.count(v)) ap_blocks[v].push_back(b.block_id);
        }
    }
    std::set<std::pair<int, int>> bc;
    for (const auto& [ap, ids] : ap_blocks) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = i + 1; j < ids.size(); ++j) {
                bc.insert({std::min(ids[i], ids[j]), std::max(ids[i], ids[j])});
            }
        }
    }
    atlas.block_cut_edges.assign(bc.begin(), bc.end());
    return atlas;
}

void assign_roles(BlockAtlas& atlas, const SliceGraph& graph, const CellCache& cell,
                  const RoleThresholds& t) {
    std::unordered_map<std::int64_t, int> run_len;
    std::unordered_map<std::int64_t, std::string> run_answer;
    for (const auto& run : cell.runs) {
        run_len[run.run_id] = static_cast<int>(run.slices.size());
        run_answer[run.run_id] = run.answer_class;
    }
    const double n_cell_runs = static_cast<double>(cell.runs.size());

    for (auto& b : atlas.blocks) {
        std::set<std::int64_t> runs;
        std::vector<double> positions;
        positions.reserve(b.node_ids.size());
        double minpos = 1.0;
        for (int v : b.node_ids) {
            const NodeId& node = graph.nodes[static_cast<std::size_t>(v)];
            runs.insert(node.run_id);
            const double pos = normalized_position(node.slice_index, run_len[node.run_id]);
            positions.push_back(pos);
            minpos = std::min(minpos, pos);
        }
        b.n_runs = static_cast<int>(runs.size());
        b.coverage = n_cell_runs > 0 ? static_cast<double>(runs.size()) / n_cell_runs : 0.0;
        b.minpos = minpos;

        std::sort(positions.begin(), positions.end());
        const std::size_t m = positions.size();
        b.medpos = (m % 2 == 1) ? positions[m / 2]
                                : 0.5 * (positions[m / 2 - 1] + positions[m / 2]);

        // Modal answer among visiting runs; ties to the lexicographically
        // smallest answer class.
        std::map<std::string, int> answers;
        for (std::int64_t r : runs) ++answers[run_answer[r]];
        int best = 0;
        for (const auto& [ans, count] : answers) best = std::max(best, count);
        b.purity = b.n_runs > 0 ? static_cast<double>(best) / b.n_runs : 0.0;

        if (b.is_trivial) {
            b.role = BlockRole::unassigned;
            continue;
        }
        const bool touches_ap = std::any_of(b.node_ids.begin(), b.node_ids.end(), [&](int v) {
            return atlas.articulation_points.count(v) > 0;
        });
        if (b.coverage > t.trunk_coverage && b.size() >= t.min_region_size &&
            b.medpos <= t.q_trunk) {
            b.role = BlockRole::shared_trunk;
        } else if (b.size() >= t.min_region_size && b.medpos > t.q_basin &&
                   b.purity >= t.basin_purity && b.n_runs >= t.basin_min_runs) {
            b.role = BlockRole::answer_basin;
        } else if (b.size() >= t.min_region_size && b.medpos > t.q_basin) {
            b.role = BlockRole::weak_basin;
        } else if (b.size() <= t.decision_max_size && touches_ap) {
            b.role = BlockRole::decision_point;
        } else {
            b.role = BlockRole::intermediate;
        }
    }
}

void resolve_primary_blocks(BlockAtlas& atlas, const SliceGraph& graph) {
    std::unordered_map<int, std::vector<const Block*>> covering;
    for (const auto& b : atlas.blocks) {
        if (b.is_trivial) continue;
        for (int v : b.node_ids) covering[v].push_back(&b);
    }
    atlas.primary_block.clear();
    for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
        auto it = covering.find(static_cast<int>(v));
        if (it == covering.end()) continue;  // skipped, not mapped to a sentinel
        const Block* best = nullptr;
        for (const Block* b : it->second) {
            if (!best) {
                best = b;
                continue;
            }
            if (b->size() != best->size()) {
                if (b->size() > best->size()) best = b;
            } else if (b->n_runs != best->n_runs) {
                if (b->n_runs > best->n_runs) best = b;
            } else if (b->minpos != best->minpos) {
                if (b->minpos < best->minpos) best = b;
            } else if (b->block_id < best->block_id) {
                best = b;
            }
        }
        atlas.primary_block[static_cast<int>(v)] = best->block_id;
    }
}

BlockAtlas build_atlas(const SliceGraph& graph, const CellCache& cell,
                       const RoleThresholds& thresholds) {
    BlockAtlas atlas = decompose(graph);
    assign_roles(atlas, graph, cell, thresholds);
    resolve_primary_blocks(atlas, graph);
    return atlas;
}

std::string atlas_to_json(const BlockAtlas& atlas, const SliceGraph& graph) {
    json blocks = json::array();
    for (const auto& b : atlas.blocks) {
        json members = json::array();
        for (int v : b.node_ids) {
            members.push_back(json{{"run_id", graph.nodes[static_cast<std::size_t>(v)].run_id},
                                   {"slice_index", graph.nodes[static_cast<std::size_t>(v)].slice_index}});
        }
        blocks.push_back(json{{"id", b.block_id}, {"size", b.size()},
                              {"trivial", b.is_trivial}, {"role", role_name(b.role)},
                              {"coverage", b.coverage}, {"purity", b.purity},
                              {"n_runs", b.n_runs}, {"medpos", b.medpos},
                              {"members", members}});
    }
    json aps = json::array();
    for (int v : atlas.articulation_points) aps.push_back(v);
    json bc = json::array();
    for (const auto& [a, b] : atlas.block_cut_edges) bc.push_back(json::array({a, b}));
    json primary = json::object();
    for (const auto& [v, bid] : atlas.primary_block) primary[std::to_string(v)] = bid;
    return json{{"blocks", blocks}, {"articulation_points", aps},
                {"block_cut_edges", bc}, {"primary_block", primary}}
        .dump(2);
}

}  // namespace slicegraph
