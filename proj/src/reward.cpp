#include "slicegraph/reward.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace slicegraph {

std::map<int, std::set<std::int64_t>> block_visitors(const SliceGraph& graph,
                                                     const BlockAtlas& atlas) {
    std::map<int, std::set<std::int64_t>> visitors;
    for (const auto& [node, block] : atlas.primary_block) {
        visitors[block].insert(graph.nodes[static_cast<std::size_t>(node)].run_id);
    }
    return visitors;
}

std::map<int, double> compute_seed_with_labels(const std::map<std::int64_t, double>& labels,
                                               const SliceGraph& graph, const BlockAtlas& atlas) {
    const auto visitors = block_visitors(graph, atlas);
    const int n = static_cast<int>(labels.size());
    std::map<int, double> seed;
    if (n == 0) return seed;
    double cell_mean = 0.0;
    for (const auto& [run, y] : labels) cell_mean += y;
    cell_mean /= n;

    for (const auto& b : atlas.blocks) {
        if (b.is_trivial) continue;
        double value = 0.0;
        auto it = visitors.find(b.block_id);
        if (it != visitors.end()) {
            int n_b = 0;
            double block_sum = 0.0;
            for (std::int64_t run : it->second) {
                auto lt = labels.find(run);
                if (lt == labels.end()) continue;  // leave-one-out removal
                ++n_b;
                block_sum += lt->second;
            }
            if (n_b >= 3 && n_b <= n - 3) {
                value = (block_sum / n_b - cell_mean) *
                        std::sqrt(static_cast<double>(n_b) / n);
            }
        }
        seed[b.block_id] = value;
    }
    return seed;
}

std::map<int, double> compute_seed(const CellCache& cell, const SliceGraph& graph,
                                   const BlockAtlas& atlas,
                                   std::optional<std::int64_t> leave_one_out) {
    std::map<std::int64_t, double> labels;
    for (const auto& run : cell.runs) {
        if (leave_one_out && run.run_id == *leave_one_out) continue;
        labels[run.run_id] = run.correct ? 1.0 : 0.0;
    }
    return compute_seed_with_labels(labels, graph, atlas);
}

DiffusionAdjacency build_diffusion_adjacency(const BlockAtlas& atlas,
                                             const SliceGraph& graph) {
    DiffusionAdjacency adj;
    adj.block_ids = atlas.nontrivial_block_ids();
    for (std::size_t i = 0; i < adj.block_ids.size(); ++i) {
        adj.index_of[adj.block_ids[i]] = static_cast<int>(i);
    }
    const std::size_t n = adj.block_ids.size();
    adj.neighbors.resize(n);

    // Block-cut edges: non-trivial blocks sharing an articulation point.
    for (const auto& [a, b] : atlas.block_cut_edges) {
        auto ia = adj.index_of.find(a);
        auto ib = adj.index_of.find(b);
        if (ia == adj.index_of.end() || ib == adj.index_of.end()) continue;
        adj.neighbors[static_cast<std::size_t>(ia->second)].insert(ib->second);
        adj.neighbors[static_cast<std::size_t>(ib->second)].insert(ia->second);
    }

    // Temporal edges: consecutive distinct primary blocks in compacted run
    // paths, symmetrized and binarized.
    std::map<std::int64_t, std::vector<std::pair<int, int>>> run_path;  // (slice_index, block)
    for (const auto& [node, block] : atlas.primary_block) {
        const NodeId& id = graph.nodes[static_cast<std::size_t>(node)];
        run_path[id.run_id].emplace_back(id.slice_index, block);
    }
    for (auto& [run, path] : run_path) {
        std::sort(path.begin(), path.end());
        int prev = -1;
        for (const auto& [pos, block] : path) {
            if (prev != -1 && block != prev) {
                const int a = adj.index_of.at(prev);
                const int b = adj.index_of.at(block);
                adj.neighbors[static_cast<std::size_t>(a)].insert(b);
                adj.neighbors[static_cast<std::size_t>(b)].insert(a);
            }
            prev = block;
        }
    }

    adj.rows.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        adj.rows[i][i] = 1.0;  // self-loop keeps every row nonzero
        for (int j : adj.neighbors[i]) adj.rows[i][static_cast<std::size_t>(j)] = 1.0;
        double row_sum = 0.0;
        for (double v : adj.rows[i]) row_sum += v;
        for (double& v : adj.rows[i]) v /= row_sum;
    }
    return adj;
}

RewardField diffuse(const std::map<int, double>& seed, const DiffusionAdjacency& adjacency,
                    double alpha, int steps) {
    RewardField field;
    field.alpha = alpha;
    field.steps = steps;
    const std::size_t n = adjacency.block_ids.size();
    field.seed.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = seed.find(adjacency.block_ids[i]);
        if (it != seed.end()) field.seed[i] = it->second;
    }
    std::vector<double> v = field.seed;
    std::vector<double> next(n, 0.0);
    for (int t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += adjacency.rows[i][j] * v[j];
            next[i] = alpha * field.seed[i] + (1.0 - alpha) * acc;
        }
        v.swap(next);
    }
    field.raw = v;
    double max_abs = 0.0;
    for (double x : v) max_abs = std::max(max_abs, std::abs(x));
    field.diffused = v;
    if (max_abs > 0.0) {
        for (double& x : field.diffused) x /= max_abs;
    }
    return field;
}

HighValueCore extract_cores(const RewardField& field, const DiffusionAdjacency& adjacency,
                            double quantile) {
    HighValueCore core;
    std::vector<std::pair<double, int>> positives;  // (value, row index)
    for (std::size_t i = 0; i < field.diffused.size(); ++i) {
        if (field.diffused[i] > 0.0) positives.emplace_back(field.diffused[i], static_cast<int>(i));
    }
    if (positives.empty()) return core;  // core absent

    std::vector<double> values;
    values.reserve(positives.size());
    for (const auto& [v, i] : positives) values.push_back(v);
    std::sort(values.begin(), values.end());
    // Inclusive percentile with linear interpolation.
    const double h = quantile * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    const double threshold = lo + 1 < values.size()
                                 ? values[lo] + frac * (values[lo + 1] - values[lo])
                                 : values[lo];

    std::set<int> core_rows;
    for (const auto& [v, i] : positives) {
        if (v >= threshold) {
            core_rows.insert(i);
            core.core_blocks.insert(adjacency.block_ids[static_cast<std::size_t>(i)]);
        }
    }

    // Connected components of the diffusion adjacency restricted to the core.
    std::set<int> unvisited = core_rows;
    std::vector<std::set<int>> components;
    while (!unvisited.empty()) {
        std::vector<int> stack{*unvisited.begin()};
        unvisited.erase(unvisited.begin());
        std::set<int> comp;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            comp.insert(adjacency.block_ids[static_cast<std::size_t>(u)]);
            for (int v : adjacency.neighbors[static_cast<std::size_t>(u)]) {
                auto it = unvisited.find(v);
                if (it != unvisited.end()) {
                    unvisited.erase(it);
                    stack.push_back(v);
                }
            }
        }
        components.push_back(std::move(comp));
    }
    std::sort(components.begin(), components.end(),
              [](const std::set<int>& a, const std::set<int>& b) {
                  if (a.size() != b.size()) return a.size() > b.size();
                  return *a.begin() < *b.begin();
              });
    core.components = std::move(components);
    core.multi_core = core.components.size() >= 2;
    if (core.multi_core) {
        core.size_ratio_second_first = static_cast<double>(core.components[1].size()) /
                                       static_cast<double>(core.components[0].size());
    }
    return core;
}

namespace {

std::map<int, std::set<int>> family_block_unions(
    const FamilyPartition& partition,
    const std::map<std::int64_t, RunFootprint>& footprints) {
    std::map<int, std::set<int>> unions;
    for (const auto& [run, family] : partition.family_of) {
        auto it = footprints.find(run);
        if (it == footprints.end()) continue;
        unions[family].insert(it->second.blocks.begin(), it->second.blocks.end());
    }
    return unions;
}

}  // namespace

std::optional<double> specialization(const FamilyPartition& partition,
                                     const std::map<std::int64_t, RunFootprint>& footprints,
                                     const HighValueCore& cores) {
    const std::size_t K = cores.components.size();
    if (K < 2) return std::nullopt;
    const auto unions = family_block_unions(partition, footprints);

    double entropy_sum = 0.0;
    int f_plus = 0;
    for (const auto& [family, blocks] : unions) {
        std::vector<double> mass(K, 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            std::size_t inter = 0;
            for (int b : cores.components[k]) inter += blocks.count(b);
            mass[k] = static_cast<double>(inter) / static_cast<double>(cores.components[k].size());
            total += mass[k];
        }
        if (total == 0.0) continue;  // no core footprint: family outside F+
        double h = 0.0;
        for (double m : mass) {
            if (m > 0.0) {
                const double p = m / total;
                h -= p * std::log(p);
            }
        }
        entropy_sum += h / std::log(static_cast<double>(K));
        ++f_plus;
    }
    if (f_plus == 0) return std::nullopt;
    return 1.0 - entropy_sum / f_plus;
}

std::optional<SharpnessResult> field_sharpness(const CellCache& cell, const SliceGraph& graph,
                                               const BlockAtlas& atlas,
                                               const DiffusionAdjacency& adjacency,
                                               const FamilyPartition& partition, int family,
                                               const RewardField& pooled,
                                               const RewardConfig& config) {
    std::map<std::int64_t, double> labels;
    for (const auto& run : cell.runs) {
        const auto it = partition.family_of.find(run.run_id);
        const bool in_family = it != partition.family_of.end() && it->second == family;
        labels[run.run_id] = (run.correct && in_family) ? 1.0 : 0.0;
    }
    const auto seed = compute_seed_with_labels(labels, graph, atlas);
    const RewardField conditioned = diffuse(seed, adjacency, config.alpha, config.steps);

    const auto max_of = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    };
    const double pooled_raw_max = max_of(pooled.raw);
    if (pooled_raw_max <= 0.0) return std::nullopt;
    SharpnessResult result;
    result.raw_ratio = max_of(conditioned.raw) / pooled_raw_max;
    const double pooled_norm_max = max_of(pooled.diffused);
    result.normalized_ratio = pooled_norm_max > 0.0
                                  ? max_of(conditioned.diffused) / pooled_norm_max
                                  : 0.0;
    return result;
}

std::optional<CoverageLoss> coverage_loss(const FamilyPartition& partition,
                                          const std::map<std::int64_t, RunFootprint>& footprints) {
    const auto unions = family_block_unions(partition, footprints);
    if (unions.size() < 2) return std::nullopt;
    std::set<int> all;
    for (const auto& [family, blocks] : unions) all.insert(blocks.begin(), blocks.end());
    if (all.empty()) return std::nullopt;

    CoverageLoss loss;
    for (const auto& [family, blocks] : unions) {
        std::set<int> others;
        for (const auto& [g, gb] : unions) {
            if (g != family) others.insert(gb.begin(), gb.end());
        }
        std::size_t unique = 0;
        for (int b : blocks) unique += others.count(b) == 0 ? 1 : 0;
        const double share = static_cast<double>(unique) / static_cast<double>(all.size());
        loss.per_family_share[family] = share;
        loss.delta_max = std::max(loss.delta_max, share);
    }
    loss.critical = loss.delta_max > 0.10;
    return loss;
}

CoreDivergence core_divergence(const FamilyPartition& partition,
                               const std::map<std::int64_t, RunFootprint>& footprints,
                               const HighValueCore& cores) {
    CoreDivergence result;
    // Visited core components per partitioned run.
    std::map<std::int64_t, std::set<int>> visited;
    for (const auto& [run, family] : partition.family_of) {
        auto it = footprints.find(run);
        if (it == footprints.end()) continue;
        for (std::size_t k = 0; k < cores.components.size(); ++k) {
            for (int b : cores.components[k]) {
                if (it->second.blocks.count(b)) {
                    visited[run].insert(static_cast<int>(k));
                    break;
                }
            }
        }
    }
    long total = 0, isomeric = 0, divergent_or_isomeric = 0;
    for (auto it = partition.family_of.begin(); it != partition.family_of.end(); ++it) {
        auto jt = it;
        for (++jt; jt != partition.family_of.end(); ++jt) {
            ++total;
            const bool iso = it->second != jt->second;
            const auto& va = visited[it->first];
            const auto& vb = visited[jt->first];
            bool divergent = false;
            if (!va.empty() && !vb.empty()) {
                ++result.eligible_pairs;
                divergent = std::none_of(va.begin(), va.end(),
                                         [&](int k) { return vb.count(k) > 0; });
                if (divergent) ++result.divergent_pairs;
            }
            if (iso) ++isomeric;
            if (iso || divergent) ++divergent_or_isomeric;
        }
    }
    if (total > 0) {
        result.uplift = static_cast<double>(divergent_or_isomeric - isomeric) /
                        static_cast<double>(total);
    }
    return result;
}

EligibilityFlags eligibility(const CellCache& cell, const SliceGraph& graph,
                             const BlockAtlas& atlas, const RewardField& field,
                             const HighValueCore& cores, const FamilyPartition& partition) {
    EligibilityFlags flags;
    int correct = 0, incorrect = 0;
    for (const auto& run : cell.runs) (run.correct ? correct : incorrect)++;
    const int n = static_cast<int>(cell.runs.size());
    const int n_nontrivial = static_cast<int>(atlas.nontrivial_block_ids().size());
    int seed_eligible = 0;
    for (const auto& [block, runs] : block_visitors(graph, atlas)) {
        const int n_b = static_cast<int>(runs.size());
        if (n_b >= 3 && n_b <= n - 3) ++seed_eligible;
    }
    const bool positive_support =
        std::any_of(field.diffused.begin(), field.diffused.end(), [](double v) { return v > 0.0; });

    if (correct < 3) flags.reasons.push_back("fewer than 3 correct runs");
    if (incorrect < 3) flags.reasons.push_back("fewer than 3 non-correct runs");
    if (n_nontrivial < 2) flags.reasons.push_back("fewer than 2 non-trivial blocks");
    if (seed_eligible < 1) flags.reasons.push_back("no seed-eligible block");
    if (!positive_support) flags.reasons.push_back("no positive field support");
    flags.reward_evaluable = flags.reasons.empty();
    flags.core_eligible_multi_family =
        flags.reward_evaluable && partition.multi_family && !cores.components.empty();
    return flags;
}

}  // namespace slicegraph
