#include "slicegraph/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace slicegraph {

void PlantSpec::validate() const {
    if (n_runs < 1 || n_families < 1 || blocks_per_family < 1 || slices_per_block < 1 ||
        keys_per_slice < 4 || shared_trunk_blocks < 0) {
        throw ValidationError("PlantSpec: non-positive dimension");
    }
    if (key_overlap_within_block <= key_overlap_across_blocks) {
        throw ValidationError("PlantSpec: within-block overlap must exceed across-block overlap");
    }
    if (key_overlap_within_block > 1.0 || key_overlap_across_blocks < 0.0) {
        throw ValidationError("PlantSpec: overlaps outside [0,1]");
    }
    for (double a : accuracy) {
        if (a < 0.0 || a > 1.0) throw ValidationError("PlantSpec: accuracy outside [0,1]");
    }
}

double GroundTruth::isomer_rate() const {
    std::vector<int> families;
    for (const auto& [run, fam] : family_of) {
        if (label_of.at(run)) families.push_back(fam);
    }
    const std::size_t m = families.size();
    if (m < 2) return 0.0;
    long cross = 0, total = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            ++total;
            if (families[i] != families[j]) ++cross;
        }
    }
    return static_cast<double>(cross) / static_cast<double>(total);
}

namespace {

// Monotonically increasing key supply; the 32-bit space is never exhausted at
// plant scale.
struct KeyCounter {
    std::uint32_t next = 1;
    std::vector<NeuronKey> take(int n) {
        std::vector<NeuronKey> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out.push_back(next++);
        return out;
    }
};

}  // namespace

std::pair<CellCache, GroundTruth> generate_cell(const PlantSpec& spec) {
    spec.validate();

    const int K = spec.keys_per_slice;
    const int shared_size = static_cast<int>(std::lround(spec.key_overlap_across_blocks * K));
    int base_size = static_cast<int>(std::lround(spec.key_overlap_within_block * K)) - shared_size;
    base_size = std::max(base_size, 1);
    // Ring pools give each block node two strictly-nearest neighbours so the
    // mutual-kNN graph contains a cycle over the whole block.
    int ring_size = std::max(1, K / 50);
    ring_size = std::min(ring_size, (K - base_size - shared_size) / 2);
    ring_size = std::max(ring_size, 0);
    const int fresh_size = K - base_size - shared_size - 2 * ring_size;

    const int n_blocks = spec.shared_trunk_blocks + spec.n_families * spec.blocks_per_family;
    GroundTruth truth;
    truth.core_placement = spec.core_placement;
    for (int b = 0; b < spec.shared_trunk_blocks; ++b) truth.trunk_blocks.push_back(b);
    for (int f = 0; f < spec.n_families; ++f) {
        for (int j = 0; j < spec.blocks_per_family; ++j) {
            truth.family_blocks[f].push_back(spec.shared_trunk_blocks +
                                             f * spec.blocks_per_family + j);
        }
    }

    // Planned node count per block determines the ring length.
    std::vector<int> runs_in_family(static_cast<std::size_t>(spec.n_families), 0);
    for (int r = 0; r < spec.n_runs; ++r) ++runs_in_family[static_cast<std::size_t>(r % spec.n_families)];
    std::vector<int> block_nodes(static_cast<std::size_t>(n_blocks), 0);
    for (int b = 0; b < spec.shared_trunk_blocks; ++b) {
        block_nodes[static_cast<std::size_t>(b)] = spec.n_runs * spec.slices_per_block;
    }
    for (int f = 0; f < spec.n_families; ++f) {
        for (int id : truth.family_blocks[f]) {
            block_nodes[static_cast<std::size_t>(id)] =
                runs_in_family[static_cast<std::size_t>(f)] * spec.slices_per_block;
        }
    }

    KeyCounter counter;
    counter.next = static_cast<std::uint32_t>(1 + (spec.seed % 1024));  // seed-shifted key space
    const std::vector<NeuronKey> shared_pool = counter.take(shared_size);
    std::vector<std::vector<NeuronKey>> base_pool(static_cast<std::size_t>(n_blocks));
    std::vector<std::vector<std::vector<NeuronKey>>> ring_pool(static_cast<std::size_t>(n_blocks));
    for (int b = 0; b < n_blocks; ++b) {
        base_pool[static_cast<std::size_t>(b)] = counter.take(base_size);
        const int s = std::max(block_nodes[static_cast<std::size_t>(b)], 1);
        for (int m = 0; m < s; ++m) {
            ring_pool[static_cast<std::size_t>(b)].push_back(counter.take(ring_size));
        }
    }

    // Deterministic labels: the first round(accuracy * m_f) runs of each
    // family are correct.
    std::vector<int> correct_budget(static_cast<std::size_t>(spec.n_families));
    for (int f = 0; f < spec.n_families; ++f) {
        const double acc =
            f < static_cast<int>(spec.accuracy.size()) ? spec.accuracy[static_cast<std::size_t>(f)] : 1.0;
        correct_budget[static_cast<std::size_t>(f)] = static_cast<int>(
            std::lround(acc * runs_in_family[static_cast<std::size_t>(f)]));
    }

    std::vector<int> block_slot(static_cast<std::size_t>(n_blocks), 0);
    std::vector<int> family_seen(static_cast<std::size_t>(spec.n_families), 0);
    std::vector<RunRecord> runs;
    for (int r = 0; r < spec.n_runs; ++r) {
        const int f = r % spec.n_families;
        RunRecord run;
        run.run_id = r;
        run.correct = family_seen[static_cast<std::size_t>(f)] <
                      correct_budget[static_cast<std::size_t>(f)];
        ++family_seen[static_cast<std::size_t>(f)];
        run.answer_class = run.correct ? "ans_" + std::to_string(f)
                                       : "wrong_" + std::to_string(f);
        truth.family_of[r] = f;
        truth.label_of[r] = run.correct;

        std::vector<int> route = truth.trunk_blocks;
        for (int id : truth.family_blocks[f]) route.push_back(id);
        int slice_index = 0;
        for (int block : route) {
            for (int rep = 0; rep < spec.slices_per_block; ++rep) {
                const auto b = static_cast<std::size_t>(block);
                const int s = static_cast<int>(ring_pool[b].size());
                const int slot = block_slot[b]++ % s;
                SliceKeySet slice;
                slice.run_id = r;
                slice.slice_index = slice_index;
                slice.keys = base_pool[b];
                slice.keys.insert(slice.keys.end(), shared_pool.begin(), shared_pool.end());
                const auto& ring_a = ring_pool[b][static_cast<std::size_t>(slot)];
                const auto& ring_b = ring_pool[b][static_cast<std::size_t>((slot + 1) % s)];
                slice.keys.insert(slice.keys.end(), ring_a.begin(), ring_a.end());
                if (s > 1) slice.keys.insert(slice.keys.end(), ring_b.begin(), ring_b.end());
                auto fresh = counter.take(fresh_size + (s > 1 ? 0 : ring_size));
                slice.keys.insert(slice.keys.end(), fresh.begin(), fresh.end());
                std::sort(slice.keys.begin(), slice.keys.end());
                slice.keys.erase(std::unique(slice.keys.begin(), slice.keys.end()),
                                 slice.keys.end());
                truth.planted_block[{r, slice_index}] = block;
                run.slices.push_back(std::move(slice));
                ++slice_index;
            }
        }
        runs.push_back(std::move(run));
    }

    CellId id;
    id.problem_id = "synth_" + std::to_string(spec.seed);
    id.model_id = "plant";
    CellCache cell = assemble_cell(id, AggregationConfig{}, std::move(runs));
    return {std::move(cell), std::move(truth)};
}

std::string ground_truth_to_json(const GroundTruth& truth) {
    nlohmann::json j;
    for (const auto& [run, fam] : truth.family_of) j["family_of"][std::to_string(run)] = fam;
    for (const auto& [run, lab] : truth.label_of) j["label_of"][std::to_string(run)] = lab;
    for (const auto& [key, block] : truth.planted_block) {
        j["planted_block"][std::to_string(key.first) + ":" + std::to_string(key.second)] = block;
    }
    j["trunk_blocks"] = truth.trunk_blocks;
    for (const auto& [fam, blocks] : truth.family_blocks) {
        j["family_blocks"][std::to_string(fam)] = blocks;
    }
    for (const auto& [fam, comp] : truth.core_placement) {
        j["core_placement"][std::to_string(fam)] = comp;
    }
    j["planted_isomer_rate"] = truth.isomer_rate();
    return j.dump(2);
}

RecoveryScore score_recovery(const SliceGraph& graph, const BlockAtlas& atlas,
                             const FamilyPartition& partition, const HighValueCore& cores,
                             const GroundTruth& truth) {
    RecoveryScore score;

    std::vector<int> planted_labels, detected_labels;
    for (const auto& [run, fam] : partition.family_of) {
        auto it = truth.family_of.find(run);
        if (it == truth.family_of.end()) continue;
        planted_labels.push_back(it->second);
        detected_labels.push_back(fam);
    }
    score.matched_runs = static_cast<int>(planted_labels.size());
    if (!planted_labels.empty()) {
        score.family_ari = adjusted_rand_index(planted_labels, detected_labels);
        score.family_nmi = normalized_mutual_information(planted_labels, detected_labels);
    }

    // Majority planted-block share per detected non-trivial block.
    double purity_sum = 0.0;
    int purity_blocks = 0;
    std::map<int, int> block_to_family;  // detected block -> majority planted family
    for (int fam = 0; fam < static_cast<int>(truth.family_blocks.size()); ++fam) {
        for (int b : truth.family_blocks.at(fam)) block_to_family[b] = fam;
    }
    std::map<int, int> detected_core_family_votes;
    std::set<int> detected_core_families;
    for (const auto& block : atlas.blocks) {
        if (block.is_trivial) continue;
        std::map<int, int> counts;
        for (int v : block.node_ids) {
            const auto& node = graph.nodes[static_cast<std::size_t>(v)];
            auto it = truth.planted_block.find({node.run_id, node.slice_index});
            if (it != truth.planted_block.end()) ++counts[it->second];
        }
        if (counts.empty()) continue;
        int best_planted = -1, best = 0, total = 0;
        for (const auto& [planted, c] : counts) {
            total += c;
            if (c > best) {
                best = c;
                best_planted = planted;
            }
        }
        purity_sum += static_cast<double>(best) / static_cast<double>(total);
        ++purity_blocks;
        if (cores.core_blocks.count(block.block_id)) {
            auto fit = block_to_family.find(best_planted);
            if (fit != block_to_family.end()) detected_core_families.insert(fit->second);
        }
    }
    if (purity_blocks > 0) score.block_purity = purity_sum / purity_blocks;

    std::set<int> intended_core_families;
    for (const auto& [fam, comp] : truth.core_placement) intended_core_families.insert(fam);
    if (intended_core_families.empty() && detected_core_families.empty()) {
        score.core_accuracy = 1.0;
    } else {
        std::set<int> inter, uni;
        std::set_intersection(intended_core_families.begin(), intended_core_families.end(),
                              detected_core_families.begin(), detected_core_families.end(),
                              std::inserter(inter, inter.begin()));
        std::set_union(intended_core_families.begin(), intended_core_families.end(),
                       detected_core_families.begin(), detected_core_families.end(),
                       std::inserter(uni, uni.begin()));
        score.core_accuracy =
            uni.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
    }

    score.isomer_rate_error =
        std::abs(std::max(cell_isomer_rate(partition), 0.0) - truth.isomer_rate());
    return score;
}

}  // namespace slicegraph
