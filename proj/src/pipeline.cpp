#include "slicegraph/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace slicegraph {

CellResult run_cell(const CellCache& cell, const PipelineConfig& config) {
    CellResult result;
    result.cell_id = cell.cell_id;
    result.n_runs = static_cast<int>(cell.runs.size());
    for (const auto& run : cell.runs) {
        if (run.correct) ++result.n_correct;
    }
    result.total_slices = static_cast<long>(cell.total_slices());
    try {
        result.graph = build_graph(cell, config.aggregation, config.metric, config.seed);
        result.atlas = build_atlas(result.graph, cell, config.thresholds);
        result.nontrivial_blocks =
            static_cast<int>(result.atlas.nontrivial_block_ids().size());
        result.footprints =
            compute_footprints(result.graph, result.atlas, config.include_bridges);
        result.partition = detect_families(cell, result.graph, result.atlas, config.family,
                                           config.include_bridges);
        result.isomer_rate = cell_isomer_rate(result.partition);
        result.adjacency = build_diffusion_adjacency(result.atlas, result.graph);
        const auto seed = compute_seed(cell, result.graph, result.atlas);
        result.field =
            diffuse(seed, result.adjacency, config.reward.alpha, config.reward.steps);
        result.cores =
            extract_cores(result.field, result.adjacency, config.reward.core_quantile);
        result.flags = eligibility(cell, result.graph, result.atlas, result.field,
                                   result.cores, result.partition);
        result.sequences = collect_sequences(cell, result.graph, result.atlas, result.cores,
                                             result.partition);
        result.kernels = estimate_kernels(result.sequences, config.alpha_smooth);
        result.pooled = pooled_kernel(result.kernels);
        result.ok = true;
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

CorpusReport summarize_corpus(const std::vector<const CellCache*>& cells,
                              const std::vector<CellResult>& results) {
    if (cells.size() != results.size()) {
        throw ValidationError("summarize_corpus: cells/results length mismatch");
    }
    CorpusReport report;
    std::vector<FamilyPartition> partitions;
    double family_count_sum = 0.0;
    int family_count_cells = 0;
    int multi_core_cells = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const CellCache& cell = *cells[i];
        const CellResult& r = results[i];
        ++report.chain.cells_total;
        report.chain.runs_analysed += static_cast<long>(cell.runs.size());
        report.chain.runs_dropped += cell.dropped_runs;
        report.chain.runs_sampled +=
            static_cast<long>(cell.runs.size()) + cell.dropped_runs;
        if (!r.ok) {
            report.error_ledger.push_back(cell.cell_id.problem_id + ": " + r.error);
            continue;
        }
        ++report.chain.cells_analysed;
        partitions.push_back(r.partition);
        if (r.partition.family_count > 0) {
            family_count_sum += r.partition.family_count;
            ++family_count_cells;
        }
        if (r.flags.reward_evaluable) {
            ++report.chain.cells_reward_evaluable;
            if (r.flags.core_eligible_multi_family) {
                ++report.chain.cells_core_eligible;
                if (r.cores.multi_core) ++multi_core_cells;
            }
        }
    }
    report.isomers = isomer_stats(partitions);
    if (family_count_cells > 0) report.mean_family_count = family_count_sum / family_count_cells;
    if (report.chain.cells_core_eligible > 0) {
        report.multi_core_rate = static_cast<double>(multi_core_cells) /
                                 static_cast<double>(report.chain.cells_core_eligible);
    }
    return report;
}

std::string corpus_report_to_json(const CorpusReport& report) {
    nlohmann::json j;
    j["eligibility_chain"] = {
        {"cells_total", report.chain.cells_total},
        {"cells_analysed", report.chain.cells_analysed},
        {"cells_reward_evaluable", report.chain.cells_reward_evaluable},
        {"cells_core_eligible", report.chain.cells_core_eligible},
    };
    j["count_ledger"] = {
        {"runs_sampled", report.chain.runs_sampled},
        {"runs_analysed", report.chain.runs_analysed},
        {"runs_dropped", report.chain.runs_dropped},
    };
    j["pairwise_isomer_rate"] = report.isomers.pairwise_isomer_rate;
    j["multi_family_rate"] = report.isomers.multi_family_rate;
    j["mean_family_count"] = report.mean_family_count;
    j["multi_core_rate"] = report.multi_core_rate;
    j["eligible_cells"] = report.isomers.eligible_cells;
    j["error_ledger"] = report.error_ledger;
    return j.dump(2);
}

std::string cell_result_to_json(const CellResult& result) {
    nlohmann::json j;
    j["problem_id"] = result.cell_id.problem_id;
    j["model_id"] = result.cell_id.model_id;
    j["ok"] = result.ok;
    if (!result.ok) {
        j["error"] = result.error;
        return j.dump(2);
    }
    j["n_runs"] = result.n_runs;
    j["n_correct"] = result.n_correct;
    j["total_slices"] = result.total_slices;
    j["graph_nodes"] = result.graph.nodes.size();
    j["graph_edges"] = result.graph.edges.size();
    j["nontrivial_blocks"] = result.nontrivial_blocks;
    j["family_count"] = result.partition.family_count;
    j["multi_family"] = result.partition.multi_family;
    j["isomer_rate"] = result.isomer_rate;
    j["reward_evaluable"] = result.flags.reward_evaluable;
    j["core_eligible_multi_family"] = result.flags.core_eligible_multi_family;
    j["eligibility_reasons"] = result.flags.reasons;
    j["core_blocks"] = std::vector<int>(result.cores.core_blocks.begin(),
                                        result.cores.core_blocks.end());
    j["core_components"] = result.cores.components.size();
    j["multi_core"] = result.cores.multi_core;
    for (const auto& [run, fam] : result.partition.family_of) {
        j["family_of"][std::to_string(run)] = fam;
    }
    nlohmann::json alphabet = nlohmann::json::array();
    for (const auto& s : result.kernels.alphabet) alphabet.push_back(s.name());
    j["typed_alphabet"] = alphabet;
    j["excluded_runs"] = result.sequences.n_excluded_runs;
    return j.dump(2);
}

std::vector<DiscoveryRow> discovery_curves(const CellCache& cell, const PipelineConfig& config,
                                           const std::vector<int>& sizes, int replicates,
                                           std::uint64_t seed) {
    std::vector<std::int64_t> run_ids;
    for (const auto& run : cell.runs) run_ids.push_back(run.run_id);
    std::sort(run_ids.begin(), run_ids.end());

    std::vector<int> order(sizes.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<DiscoveryRow> rows;
    for (int n : sizes) {
        DiscoveryRow row;
        row.n_runs = n;
        if (n > static_cast<int>(run_ids.size())) {
            rows.push_back(row);
            continue;
        }
        double fam_sum = 0.0, core_sum = 0.0, cov_sum = 0.0;
        int done = 0;
        for (int rep = 0; rep < replicates; ++rep) {
            std::mt19937_64 rng(seed + static_cast<std::uint64_t>(rep));
            std::vector<std::int64_t> pool = run_ids;
            std::shuffle(pool.begin(), pool.end(), rng);
            std::set<std::int64_t> chosen(pool.begin(),
                                          pool.begin() + static_cast<std::ptrdiff_t>(n));
            const CellCache sub = subset_cell(cell, chosen);
            const CellResult r = run_cell(sub, config);
            if (!r.ok) continue;
            fam_sum += r.partition.family_count;
            core_sum += static_cast<double>(r.cores.components.size());
            if (!r.graph.nodes.empty()) {
                cov_sum += static_cast<double>(r.atlas.primary_block.size()) /
                           static_cast<double>(r.graph.nodes.size());
            }
            ++done;
        }
        row.replicates = done;
        if (done > 0) {
            row.mean_family_count = fam_sum / done;
            row.mean_core_components = core_sum / done;
            row.mean_block_coverage = cov_sum / done;
        }
        rows.push_back(row);
    }
    double max_cov = 0.0;
    for (const auto& row : rows) {
        if (row.replicates > 0) max_cov = row.mean_block_coverage;  // largest N is last
    }
    for (auto& row : rows) {
        row.coverage_ratio_vs_max = max_cov > 0.0 ? row.mean_block_coverage / max_cov : 0.0;
    }
    return rows;
}

std::vector<FamilySweepRow> family_sweep(const CellCache& cell, const PipelineConfig& config,
                                         const std::vector<double>& resolutions,
                                         const std::vector<double>& thresholds) {
    const SliceGraph graph = build_graph(cell, config.aggregation, config.metric, config.seed);
    const BlockAtlas atlas = build_atlas(graph, cell, config.thresholds);
    std::vector<FamilySweepRow> rows;
    for (double rho : resolutions) {
        for (double tau : thresholds) {
            FamilyConfig fc = config.family;
            fc.resolution = rho;
            fc.edge_threshold = tau;
            const FamilyPartition p =
                detect_families(cell, graph, atlas, fc, config.include_bridges);
            FamilySweepRow row;
            row.resolution = rho;
            row.threshold = tau;
            row.family_count = p.family_count;
            row.isomer_rate = std::max(cell_isomer_rate(p), 0.0);
            row.multi_family = p.multi_family;
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SigmaSweepRow> sigma_sweep(const CellCache& cell, const PipelineConfig& config,
                                       const std::vector<double>& sigmas) {
    const SliceGraph baseline =
        build_graph(cell, config.aggregation, config.metric, config.seed);
    std::set<std::pair<int, int>> baseline_edges;
    for (const auto& e : baseline.edges) baseline_edges.emplace(e.a, e.b);

    std::vector<SigmaSweepRow> rows;
    for (double sigma : sigmas) {
        AggregationConfig ac = config.aggregation;
        ac.sigma = sigma;
        const SliceGraph g = build_graph(cell, ac, config.metric, config.seed);
        SigmaSweepRow row;
        row.sigma = sigma;
        row.edge_count = static_cast<long>(g.edges.size());
        std::set<std::pair<int, int>> edges;
        for (const auto& e : g.edges) edges.emplace(e.a, e.b);
        row.edge_set_matches_baseline = edges == baseline_edges;
        rows.push_back(row);
    }
    return rows;
}

std::vector<RewardSweepRow> reward_sweep(const CellCache& cell, const PipelineConfig& config,
                                         const std::vector<double>& alphas,
                                         const std::vector<double>& quantiles) {
    const SliceGraph graph = build_graph(cell, config.aggregation, config.metric, config.seed);
    const BlockAtlas atlas = build_atlas(graph, cell, config.thresholds);
    const DiffusionAdjacency adjacency = build_diffusion_adjacency(atlas, graph);
    const auto seed = compute_seed(cell, graph, atlas);
    std::vector<RewardSweepRow> rows;
    for (double alpha : alphas) {
        const RewardField field = diffuse(seed, adjacency, alpha, config.reward.steps);
        for (double q : quantiles) {
            const HighValueCore cores = extract_cores(field, adjacency, q);
            RewardSweepRow row;
            row.alpha = alpha;
            row.quantile = q;
            row.core_size = static_cast<int>(cores.core_blocks.size());
            row.core_components = static_cast<int>(cores.components.size());
            rows.push_back(row);
        }
    }
    return rows;
}

std::uint64_t cache_fingerprint(const CellCache& cell) {
    std::uint64_t h = 1469598103934665603ull;
    const auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xFFu;
            h *= 1099511628211ull;
        }
    };
    for (char c : cell.cell_id.problem_id) mix(static_cast<unsigned char>(c));
    for (char c : cell.cell_id.model_id) mix(static_cast<unsigned char>(c));
    for (const auto& run : cell.runs) {
        mix(static_cast<std::uint64_t>(run.run_id));
        mix(run.correct ? 1u : 0u);
        for (char c : run.answer_class) mix(static_cast<unsigned char>(c));
        for (const auto& slice : run.slices) {
            mix(static_cast<std::uint64_t>(slice.slice_index));
            for (NeuronKey k : slice.keys) mix(k);
        }
    }
    return h;
}

std::string cell_artifact_dirname(const CellCache& cell, const PipelineConfig& config) {
    std::ostringstream os;
    os << std::hex << cache_fingerprint(cell) << "-"
       << config_hash(config.aggregation, config.metric) << "-" << std::dec << config.seed
       << (config.include_bridges ? "-b" : "");
    return os.str();
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace slicegraph
