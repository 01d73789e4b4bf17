// Command-line surface for the SliceGraph toolkit: per-cell pipeline stages,
// robustness procedures, null controls, synthetic cells, and corpus reports.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "slicegraph/nulls.hpp"
#include "slicegraph/pipeline.hpp"
#include "slicegraph/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slicegraph;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string cache_dir;
    std::string metric = "jaccard";
    std::uint64_t seed = 0;
    int jobs = 0;
    bool include_bridges = false;
};

void apply_config_json(const json& j, PipelineConfig& config) {
    const auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("slice_size", config.aggregation.slice_size);
    get("sep_up", config.aggregation.sep_up);
    get("global_topk", config.aggregation.global_topk);
    get("slice_topk", config.aggregation.slice_topk);
    get("k_neighbors", config.aggregation.k_neighbors);
    get("sigma", config.aggregation.sigma);
    get("size_cap", config.aggregation.size_cap);
    get("trunk_coverage", config.thresholds.trunk_coverage);
    get("min_region_size", config.thresholds.min_region_size);
    get("q_trunk", config.thresholds.q_trunk);
    get("q_basin", config.thresholds.q_basin);
    get("basin_purity", config.thresholds.basin_purity);
    get("basin_min_runs", config.thresholds.basin_min_runs);
    get("decision_max_size", config.thresholds.decision_max_size);
    get("edge_threshold", config.family.edge_threshold);
    get("resolution", config.family.resolution);
    get("family_seed", config.family.seed);
    get("alpha", config.reward.alpha);
    get("steps", config.reward.steps);
    get("core_quantile", config.reward.core_quantile);
    get("alpha_smooth", config.alpha_smooth);
}

PipelineConfig make_pipeline_config(const GlobalOptions& opts) {
    PipelineConfig config;
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        if (!in) throw ValidationError("cannot open config file: " + opts.config_path);
        json j;
        in >> j;
        apply_config_json(j, config);
    }
    config.metric = metric_from_name(opts.metric);
    config.seed = opts.seed;
    config.include_bridges = opts.include_bridges;
    config.aggregation.validate();
    return config;
}

std::string resolve_cache_dir(const GlobalOptions& opts) {
    if (!opts.cache_dir.empty()) return opts.cache_dir;
    if (const char* env = std::getenv("SLICEGRAPH_CACHE_DIR")) return env;
    return "slicegraph-cache";
}

int resolve_jobs(const GlobalOptions& opts) {
    if (opts.jobs > 0) return opts.jobs;
    if (const char* env = std::getenv("SLICEGRAPH_JOBS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

CellCache load_cell(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        return read_cache_json(path);
    }
    return read_cache(path);
}

void write_text(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << content;
}

fs::path cell_dir(const std::string& cache_dir, const CellCache& cell,
                  const PipelineConfig& config) {
    return fs::path(cache_dir) / cell_artifact_dirname(cell, config);
}

/// Raw ingestion schema: runs of per-token {layer, up[], gate[]} records.
CellCache ingest_raw(const json& j, const AggregationConfig& config) {
    std::vector<RunRecord> runs;
    for (const auto& jr : j.at("runs")) {
        RunRecord run;
        run.run_id = jr.at("run_id").get<std::int64_t>();
        run.correct = jr.value("correct", false);
        run.answer_class = jr.value("answer_class", std::string{});
        std::vector<std::vector<ScoredKey>> token_scores;
        for (const auto& jt : jr.at("tokens")) {
            std::vector<ScoredKey> merged;
            for (const auto& jl : jt) {
                const auto layer = jl.at("layer").get<std::uint32_t>();
                const auto up = jl.at("up").get<std::vector<double>>();
                const auto gate = jl.at("gate").get<std::vector<double>>();
                auto scored =
                    score_token_activations(up, gate, layer, config.global_topk);
                merged.insert(merged.end(), scored.begin(), scored.end());
            }
            token_scores.push_back(std::move(merged));
        }
        run.slices = aggregate_rows(token_scores, config);
        runs.push_back(std::move(run));
    }
    CellId id;
    id.problem_id = j.value("problem_id", std::string{"unknown"});
    id.model_id = j.value("model_id", std::string{"unknown"});
    return assemble_cell(id, config, std::move(runs));
}

json null_result_json(const std::string& kind, const NullResult& r) {
    return json{{"kind", kind},       {"real", r.real},   {"null_mean", r.null_mean},
                {"null_sd", r.null_sd}, {"p95", r.p95},   {"z", r.z},
                {"above_p95", r.above_p95}, {"shuffles", r.shuffles}};
}

double mean_family_tv(const TypedKernelSet& kernels, TvMode mode) {
    std::vector<int> families;
    for (const auto& [fam, kernel] : kernels.per_family) {
        if (fam >= 0) families.push_back(fam);
    }
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < families.size(); ++i) {
        for (std::size_t j = i + 1; j < families.size(); ++j) {
            const auto tv = family_tv(kernels.per_family.at(families[i]),
                                      kernels.per_family.at(families[j]),
                                      kernels.alphabet.size(), mode);
            if (tv) {
                sum += *tv;
                ++pairs;
            }
        }
    }
    return pairs > 0 ? sum / pairs : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SliceGraph process-atlas toolkit"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "JSON file overriding pipeline knobs");
    app.add_option("--seed", opts.seed, "global seed");
    app.add_option("--jobs", opts.jobs, "worker count (env SLICEGRAPH_JOBS)");
    app.add_option("--metric", opts.metric, "jaccard | cosine | overlap");
    app.add_option("--cache-dir", opts.cache_dir,
                   "artifact directory (env SLICEGRAPH_CACHE_DIR)");
    app.add_flag("--include-bridges", opts.include_bridges,
                 "count trivial K2 bridges in run footprints");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "raw activation JSON -> cache container");
    std::string ingest_in, ingest_out;
    bool ingest_presliced = false;
    ingest->add_option("--input", ingest_in)->required();
    ingest->add_option("--out", ingest_out)->required();
    ingest->add_flag("--pre-sliced", ingest_presliced, "input is already a cache sidecar JSON");

    const auto add_cache_cmd = [&](const char* name, const char* help, std::string& cache_arg) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--cache", cache_arg)->required();
        return cmd;
    };

    std::string build_cache, families_cache, reward_cache, dynamics_cache, nulls_cache,
        robust_cache, sweep_cache;
    auto* build_cmd = add_cache_cmd("build", "cache -> graph + atlas artifacts", build_cache);
    auto* families_cmd = add_cache_cmd("families", "correct-run process families", families_cache);
    auto* reward_cmd = add_cache_cmd("reward", "reward field, cores, alignment readouts", reward_cache);
    auto* dynamics_cmd = add_cache_cmd("dynamics", "typed kernels and diagnostics", dynamics_cache);
    auto* nulls_cmd = add_cache_cmd("nulls", "null-control comparisons", nulls_cache);
    auto* robust_cmd = add_cache_cmd(
        "robustness", "split-half, held-out, controlled-m, discovery curves", robust_cache);
    auto* sweep_cmd = add_cache_cmd("sweep", "sensitivity sweeps", sweep_cache);

    std::string nulls_kind = "family_label_shuffle";
    int nulls_shuffles = 0;
    nulls_cmd->add_option("--kind", nulls_kind,
                          "degree_rewire | blocktype_rewire | family_label_shuffle | "
                          "temporal_shuffle | label_permutation");
    nulls_cmd->add_option("--shuffles", nulls_shuffles, "0 -> per-kind default");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a planted synthetic cell");
    PlantSpec plant;
    std::string synth_out;
    synth->add_option("--out", synth_out)->required();
    synth->add_option("--runs", plant.n_runs);
    synth->add_option("--families", plant.n_families);
    synth->add_option("--blocks-per-family", plant.blocks_per_family);
    synth->add_option("--trunk-blocks", plant.shared_trunk_blocks);
    synth->add_option("--slices-per-block", plant.slices_per_block);
    synth->add_option("--keys", plant.keys_per_slice);
    synth->add_option("--overlap-within", plant.key_overlap_within_block);
    synth->add_option("--overlap-across", plant.key_overlap_across_blocks);
    synth->add_option("--accuracy", plant.accuracy, "per-family accuracy list");

    // report
    auto* report = app.add_subcommand("report", "corpus roll-up over many caches");
    std::vector<std::string> report_caches;
    std::string report_out = "report";
    report->add_option("--cache", report_caches, "cache files (repeatable)")->required();
    report->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string cache_dir = resolve_cache_dir(opts);
        const int jobs = resolve_jobs(opts);
#ifdef _OPENMP
        omp_set_num_threads(jobs);
#else
        (void)jobs;
#endif

        if (*ingest) {
            PipelineConfig config = make_pipeline_config(opts);
            if (ingest_presliced) {
                const CellCache cell = read_cache_json(ingest_in);
                write_cache(cell, ingest_out);
            } else {
                std::ifstream in(ingest_in);
                if (!in) throw ValidationError("cannot open " + ingest_in);
                json j;
                in >> j;
                write_cache(ingest_raw(j, config.aggregation), ingest_out);
            }
            return 0;
        }
        if (*synth) {
            plant.seed = opts.seed;
            auto [cell, truth] = generate_cell(plant);
            write_cache(cell, synth_out);
            write_text(fs::path(synth_out + ".truth.json"), ground_truth_to_json(truth));
            return 0;
        }

        const auto run_one = [&](const std::string& path) {
            const CellCache cell = load_cell(path);
            PipelineConfig config = make_pipeline_config(opts);
            CellResult result = run_cell(cell, config);
            return std::make_tuple(std::move(cell), std::move(config), std::move(result));
        };

        if (*build_cmd) {
            auto [cell, config, result] = run_one(build_cache);
            if (!result.ok) throw ValidationError(result.error);
            const fs::path dir = cell_dir(cache_dir, cell, config);
            write_text(dir / "graph.json", graph_to_json(result.graph));
            write_text(dir / "graph.dot", graph_to_dot(result.graph));
            write_text(dir / "atlas.json", atlas_to_json(result.atlas, result.graph));
            write_text(dir / "cell.json", cell_result_to_json(result));
            std::cout << dir.string() << "\n";
            return 0;
        }
        if (*families_cmd) {
            auto [cell, config, result] = run_one(families_cache);
            if (!result.ok) throw ValidationError(result.error);
            const fs::path dir = cell_dir(cache_dir, cell, config);
            std::ostringstream csv;
            csv << "run_id,family\n";
            for (const auto& [run, fam] : result.partition.family_of) {
                csv << run << "," << fam << "\n";
            }
            write_text(dir / "families.csv", csv.str());
            write_text(dir / "cell.json", cell_result_to_json(result));
            std::cout << "families=" << result.partition.family_count
                      << " isomer_rate=" << result.isomer_rate << "\n";
            return 0;
        }
        if (*reward_cmd) {
            auto [cell, config, result] = run_one(reward_cache);
            if (!result.ok) throw ValidationError(result.error);
            const fs::path dir = cell_dir(cache_dir, cell, config);
            json j;
            for (std::size_t i = 0; i < result.adjacency.block_ids.size(); ++i) {
                const std::string key = std::to_string(result.adjacency.block_ids[i]);
                j["seed"][key] = result.field.seed[i];
                j["field"][key] = result.field.diffused[i];
                j["field_raw"][key] = result.field.raw[i];
            }
            j["core_blocks"] = std::vector<int>(result.cores.core_blocks.begin(),
                                                result.cores.core_blocks.end());
            j["multi_core"] = result.cores.multi_core;
            j["core_components"] = result.cores.components.size();
            if (const auto spec = specialization(result.partition, result.footprints,
                                                 result.cores)) {
                j["specialization"] = *spec;
            }
            if (const auto loss = coverage_loss(result.partition, result.footprints)) {
                j["coverage_delta_max"] = loss->delta_max;
                j["coverage_critical"] = loss->critical;
            }
            const CoreDivergence div =
                core_divergence(result.partition, result.footprints, result.cores);
            j["core_divergence_uplift"] = div.uplift;
            j["reward_evaluable"] = result.flags.reward_evaluable;
            write_text(dir / "reward.json", j.dump(2));
            std::cout << "core_blocks=" << result.cores.core_blocks.size() << "\n";
            return 0;
        }
        if (*dynamics_cmd) {
            auto [cell, config, result] = run_one(dynamics_cache);
            if (!result.ok) throw ValidationError(result.error);
            const fs::path dir = cell_dir(cache_dir, cell, config);
            json j;
            for (const auto& s : result.kernels.alphabet) j["alphabet"].push_back(s.name());
            for (const auto& [fam, kernel] : result.kernels.per_family) {
                const std::string key = std::to_string(fam);
                j["counts"][key] = kernel.counts;
                j["probs"][key] = kernel.probs;
                j["low_support"][key] = kernel.low_support;
            }
            write_text(dir / "kernels.json", j.dump(2));

            std::ostringstream csv;
            csv << "family_a,family_b,tv_full,tv_common_support\n";
            std::vector<int> fams;
            for (const auto& [fam, kernel] : result.kernels.per_family) {
                if (fam >= 0) fams.push_back(fam);
            }
            for (std::size_t i = 0; i < fams.size(); ++i) {
                for (std::size_t k = i + 1; k < fams.size(); ++k) {
                    const auto& a = result.kernels.per_family.at(fams[i]);
                    const auto& b = result.kernels.per_family.at(fams[k]);
                    const auto full =
                        family_tv(a, b, result.kernels.alphabet.size(), TvMode::full);
                    const auto common = family_tv(a, b, result.kernels.alphabet.size(),
                                                  TvMode::common_support);
                    csv << fams[i] << "," << fams[k] << "," << (full ? *full : -1.0) << ","
                        << (common ? *common : -1.0) << "\n";
                }
            }
            write_text(dir / "family_tv.csv", csv.str());

            const auto q = committor(result.pooled, result.kernels.alphabet);
            const auto esc =
                escape_and_mfpt(result.pooled, result.kernels.alphabet, result.sequences);
            std::ostringstream diag;
            diag << "state,committor,mfpt_to_core\n";
            for (std::size_t i = 0; i < result.kernels.alphabet.size(); ++i) {
                diag << csv_escape(result.kernels.alphabet[i].name()) << "," << q[i] << ","
                     << esc.mfpt[i] << "\n";
            }
            write_text(dir / "diagnostics.csv", diag.str());
            json jd;
            jd["three_step_hazard"] = esc.three_step_hazard;
            jd["hazard_defined"] = esc.defined;
            write_text(dir / "hazard.json", jd.dump(2));
            return 0;
        }
        if (*nulls_cmd) {
            auto [cell, config, result] = run_one(nulls_cache);
            if (!result.ok) throw ValidationError(result.error);
            const fs::path dir = cell_dir(cache_dir, cell, config);
            NullSpec spec;
            spec.kind = [&] {
                if (nulls_kind == "degree_rewire") return NullKind::degree_rewire;
                if (nulls_kind == "blocktype_rewire") return NullKind::blocktype_rewire;
                if (nulls_kind == "family_label_shuffle") return NullKind::family_label_shuffle;
                if (nulls_kind == "temporal_shuffle") return NullKind::temporal_shuffle;
                if (nulls_kind == "label_permutation") return NullKind::label_permutation;
                throw ValidationError("unknown null kind: " + nulls_kind);
            }();
            spec.shuffles = nulls_shuffles;
            spec.seed = opts.seed;
            const int n = spec.effective_shuffles();
            std::vector<double> nulls_values;
            double real = 0.0;
            switch (spec.kind) {
                case NullKind::family_label_shuffle: {
                    real = mean_family_tv(result.kernels, TvMode::full);
                    for (int s = 0; s < n; ++s) {
                        const FamilyPartition shuffled =
                            family_label_shuffle(result.partition, spec.seed + s + 1);
                        const auto seqs = collect_sequences(cell, result.graph, result.atlas,
                                                            result.cores, shuffled);
                        const auto kernels = estimate_kernels(seqs, config.alpha_smooth);
                        nulls_values.push_back(mean_family_tv(kernels, TvMode::full));
                    }
                    break;
                }
                case NullKind::temporal_shuffle: {
                    real = mean_family_tv(result.kernels, TvMode::full);
                    for (int s = 0; s < n; ++s) {
                        const auto shuffled = temporal_shuffle(
                            result.sequences, result.kernels.alphabet, spec.seed + s + 1);
                        const auto kernels = estimate_kernels(shuffled, config.alpha_smooth);
                        nulls_values.push_back(mean_family_tv(kernels, TvMode::full));
                    }
                    break;
                }
                case NullKind::degree_rewire: {
                    real = result.isomer_rate >= 0.0 ? result.isomer_rate : 0.0;
                    for (int s = 0; s < n; ++s) {
                        const auto rewired =
                            degree_preserving_rewire(result.graph, spec.seed + s + 1);
                        const BlockAtlas atlas =
                            build_atlas(rewired.graph, cell, config.thresholds);
                        const FamilyPartition p = detect_families(
                            cell, rewired.graph, atlas, config.family, config.include_bridges);
                        nulls_values.push_back(std::max(cell_isomer_rate(p), 0.0));
                    }
                    break;
                }
                case NullKind::blocktype_rewire: {
                    real = mean_family_tv(result.kernels, TvMode::full);
                    for (int s = 0; s < n; ++s) {
                        const BlockAtlas atlas =
                            blocktype_preserving_rewire(result.atlas, spec.seed + s + 1);
                        const auto seqs = collect_sequences(cell, result.graph, atlas,
                                                            result.cores, result.partition);
                        const auto kernels = estimate_kernels(seqs, config.alpha_smooth);
                        nulls_values.push_back(mean_family_tv(kernels, TvMode::full));
                    }
                    break;
                }
                case NullKind::label_permutation: {
                    for (double v : result.field.raw) real = std::max(real, v);
                    for (int s = 0; s < n; ++s) {
                        const CellCache permuted = label_permutation(cell, spec.seed + s + 1);
                        const auto seed_v = compute_seed(permuted, result.graph, result.atlas);
                        const RewardField field = diffuse(seed_v, result.adjacency,
                                                          config.reward.alpha,
                                                          config.reward.steps);
                        double m = 0.0;
                        for (double v : field.raw) m = std::max(m, v);
                        nulls_values.push_back(m);
                    }
                    break;
                }
            }
            const NullResult nr = summarize_null(real, nulls_values);
            write_text(dir / ("null_" + nulls_kind + ".json"),
                       null_result_json(nulls_kind, nr).dump(2));
            std::cout << nulls_kind << " real=" << nr.real << " p95=" << nr.p95
                      << " z=" << nr.z << "\n";
            return 0;
        }
        if (*robust_cmd) {
            const CellCache cell = load_cell(robust_cache);
            PipelineConfig config = make_pipeline_config(opts);
            const fs::path dir = cell_dir(cache_dir, cell, config);
            const SliceGraph graph =
                build_graph(cell, config.aggregation, config.metric, config.seed);
            const BlockAtlas atlas = build_atlas(graph, cell, config.thresholds);

            json j;
            const SplitHalfResult split =
                split_half_stability(cell, graph, atlas, config.family);
            j["split_half"] = {{"eligible", split.eligible},
                               {"both_halves_multi_family", split.both_halves_multi_family},
                               {"family_count", {split.family_count[0], split.family_count[1]}},
                               {"isomer_rate", {split.isomer_rate[0], split.isomer_rate[1]}}};
            const HeldoutResult heldout =
                heldout_projection(cell, config.aggregation, config.metric, 5, config.seed,
                                   config.family, config.thresholds);
            j["heldout"] = {{"eligible", heldout.eligible},
                            {"block_coverage", heldout.block_coverage},
                            {"multi_family_rate", heldout.multi_family_rate},
                            {"isomer_rate", heldout.isomer_rate},
                            {"nmi_vs_full", heldout.nmi_vs_full}};
            const auto footprints =
                compute_footprints(graph, atlas, config.include_bridges);
            std::vector<RunFootprint> correct;
            for (const auto& run : cell.runs) {
                if (!run.correct) continue;
                auto it = footprints.find(run.run_id);
                if (it != footprints.end() && !it->second.blocks.empty()) {
                    correct.push_back(it->second);
                }
            }
            const auto weights = coverage_weights(atlas, config.include_bridges);
            for (int m : {4, 8, 16}) {
                const ControlledIsomerRow row = controlled_isomer_rate(
                    {correct}, {weights}, m, 10, config.seed, config.family);
                j["controlled_m"].push_back({{"m", m},
                                             {"mean_isomer_rate", row.mean_isomer_rate},
                                             {"multi_family_rate", row.multi_family_rate},
                                             {"mean_family_count", row.mean_family_count},
                                             {"eligible_cells", row.eligible_cells}});
            }
            for (const auto& row : discovery_curves(cell, config)) {
                j["discovery"].push_back({{"n_runs", row.n_runs},
                                          {"replicates", row.replicates},
                                          {"mean_family_count", row.mean_family_count},
                                          {"mean_core_components", row.mean_core_components},
                                          {"mean_block_coverage", row.mean_block_coverage},
                                          {"coverage_ratio_vs_max",
                                           row.coverage_ratio_vs_max}});
            }
            write_text(dir / "robustness.json", j.dump(2));
            return 0;
        }
        if (*sweep_cmd) {
            const CellCache cell = load_cell(sweep_cache);
            PipelineConfig config = make_pipeline_config(opts);
            const fs::path dir = cell_dir(cache_dir, cell, config);
            std::ostringstream fam_csv;
            fam_csv << "resolution,threshold,family_count,isomer_rate,multi_family\n";
            for (const auto& row : family_sweep(cell, config)) {
                fam_csv << row.resolution << "," << row.threshold << "," << row.family_count
                        << "," << row.isomer_rate << "," << (row.multi_family ? 1 : 0) << "\n";
            }
            write_text(dir / "sweep_family.csv", fam_csv.str());
            std::ostringstream sig_csv;
            sig_csv << "sigma,edge_count,edge_set_matches_baseline\n";
            for (const auto& row : sigma_sweep(cell, config)) {
                sig_csv << row.sigma << "," << row.edge_count << ","
                        << (row.edge_set_matches_baseline ? 1 : 0) << "\n";
            }
            write_text(dir / "sweep_sigma.csv", sig_csv.str());
            std::ostringstream rew_csv;
            rew_csv << "alpha,quantile,core_size,core_components\n";
            for (const auto& row : reward_sweep(cell, config)) {
                rew_csv << row.alpha << "," << row.quantile << "," << row.core_size << ","
                        << row.core_components << "\n";
            }
            write_text(dir / "sweep_reward.csv", rew_csv.str());
            return 0;
        }
        if (*report) {
            PipelineConfig config = make_pipeline_config(opts);
            std::vector<CellCache> cells;
            cells.reserve(report_caches.size());
            for (const auto& path : report_caches) cells.push_back(load_cell(path));
            std::vector<CellResult> results(cells.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
            for (std::size_t i = 0; i < cells.size(); ++i) {
                results[i] = run_cell(cells[i], config);
            }
            std::vector<const CellCache*> ptrs;
            for (const auto& c : cells) ptrs.push_back(&c);
            const CorpusReport corpus = summarize_corpus(ptrs, results);
            const fs::path dir(report_out);
            write_text(dir / "report.json", corpus_report_to_json(corpus));
            std::ostringstream csv;
            csv << "problem_id,ok,n_runs,n_correct,family_count,isomer_rate,multi_family,"
                   "reward_evaluable,core_eligible,multi_core\n";
            for (std::size_t i = 0; i < cells.size(); ++i) {
                const auto& r = results[i];
                csv << csv_escape(r.cell_id.problem_id) << "," << (r.ok ? 1 : 0) << ","
                    << r.n_runs << "," << r.n_correct << "," << r.partition.family_count
                    << "," << r.isomer_rate << "," << (r.partition.multi_family ? 1 : 0)
                    << "," << (r.flags.reward_evaluable ? 1 : 0) << ","
                    << (r.flags.core_eligible_multi_family ? 1 : 0) << ","
                    << (r.cores.multi_core ? 1 : 0) << "\n";
            }
            write_text(dir / "cells.csv", csv.str());
            // ECDF plot data: sorted per-cell isomer rates with cumulative share.
            std::vector<double> rates;
            for (const auto& r : results) {
                if (r.ok && r.isomer_rate >= 0.0) rates.push_back(r.isomer_rate);
            }
            std::sort(rates.begin(), rates.end());
            std::ostringstream ecdf;
            ecdf << "isomer_rate,ecdf\n";
            for (std::size_t i = 0; i < rates.size(); ++i) {
                ecdf << rates[i] << ","
                     << static_cast<double>(i + 1) / static_cast<double>(rates.size()) << "\n";
            }
            write_text(dir / "isomer_ecdf.csv", ecdf.str());
            std::cout << "analysed=" << corpus.chain.cells_analysed << "/"
                      << corpus.chain.cells_total
                      << " isomer_rate=" << corpus.isomers.pairwise_isomer_rate << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
