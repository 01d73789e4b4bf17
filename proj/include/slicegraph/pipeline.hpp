#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slicegraph/atlas.hpp"
#include "slicegraph/cache.hpp"
#include "slicegraph/dynamics.hpp"
#include "slicegraph/families.hpp"
#include "slicegraph/graph.hpp"
#include "slicegraph/reward.hpp"

namespace slicegraph {

/// Full per-cell pipeline configuration.
struct PipelineConfig {
    AggregationConfig aggregation;
    RoleThresholds thresholds;
    FamilyConfig family;
    RewardConfig reward;
    double alpha_smooth = 0.5;
    Metric metric = Metric::jaccard;
    std::uint64_t seed = 0;
    bool include_bridges = false;
};

/// Everything the pipeline derives for one cell.  The graph borrows slice
/// pointers from the input cache, so the cache must outlive the result.
struct CellResult {
    CellId cell_id;
    bool ok = false;
    std::string error;  // first failing stage, for the corpus error ledger

    SliceGraph graph;
    BlockAtlas atlas;
    std::map<std::int64_t, RunFootprint> footprints;
    FamilyPartition partition;
    DiffusionAdjacency adjacency;
    RewardField field;
    HighValueCore cores;
    EligibilityFlags flags;
    TypedSequences sequences;
    TypedKernelSet kernels;
    TypedKernel pooled;

    int n_runs = 0;
    int n_correct = 0;
    long total_slices = 0;
    int nontrivial_blocks = 0;
    double isomer_rate = -1.0;  // -1 when < 2 partitioned correct runs
};

/// graph -> atlas -> families -> reward -> cores -> dynamics; stage failures
/// are captured in `error` instead of thrown.
CellResult run_cell(const CellCache& cell, const PipelineConfig& config);

/// Monotone eligibility chain plus run-count reconciliation
/// (sampled = analysed + dropped).
struct EligibilityChain {
    int cells_total = 0;
    int cells_analysed = 0;          // pipeline ran to completion
    int cells_reward_evaluable = 0;
    int cells_core_eligible = 0;
    long runs_sampled = 0;           // analysed + dropped at ingestion
    long runs_analysed = 0;
    long runs_dropped = 0;
};

struct CorpusReport {
    EligibilityChain chain;
    IsomerStats isomers;
    double multi_core_rate = 0.0;    // among core-eligible cells
    double mean_family_count = 0.0;  // among analysed multi-run cells
    std::vector<std::string> error_ledger;  // "<problem_id>: <error>"
};

CorpusReport summarize_corpus(const std::vector<const CellCache*>& cells,
                              const std::vector<CellResult>& results);

std::string corpus_report_to_json(const CorpusReport& report);
std::string cell_result_to_json(const CellResult& result);

/// Subsampling discovery curves: R uniform without-replacement subsamples of
/// N runs, full pipeline per subsample; coverage ratio is against the
/// largest-N row.
struct DiscoveryRow {
    int n_runs = 0;
    int replicates = 0;
    double mean_family_count = 0.0;
    double mean_core_components = 0.0;
    double mean_block_coverage = 0.0;  // graph nodes inside non-trivial blocks
    double coverage_ratio_vs_max = 0.0;
};
std::vector<DiscoveryRow> discovery_curves(const CellCache& cell, const PipelineConfig& config,
                                           const std::vector<int>& sizes = {8, 16, 32, 64},
                                           int replicates = 5, std::uint64_t seed = 0);

/// Resolution x edge-threshold family sensitivity grid on a fixed scaffold.
struct FamilySweepRow {
    double resolution = 0.0;
    double threshold = 0.0;
    int family_count = 0;
    double isomer_rate = 0.0;
    bool multi_family = false;
};
std::vector<FamilySweepRow> family_sweep(const CellCache& cell, const PipelineConfig& config,
                                         const std::vector<double>& resolutions = {0.5, 1.0, 1.5,
                                                                                   2.0},
                                         const std::vector<double>& thresholds = {0.025, 0.05,
                                                                                  0.1});

/// RBF-scale sweep; sigma only reweights edges, so edge sets must match the
/// baseline exactly.
struct SigmaSweepRow {
    double sigma = 0.0;
    long edge_count = 0;
    bool edge_set_matches_baseline = false;
};
std::vector<SigmaSweepRow> sigma_sweep(const CellCache& cell, const PipelineConfig& config,
                                       const std::vector<double>& sigmas = {0.20, 0.35, 0.50});

/// Diffusion alpha x core-quantile sweep on a fixed graph/atlas.
struct RewardSweepRow {
    double alpha = 0.0;
    double quantile = 0.0;
    int core_size = 0;
    int core_components = 0;
};
std::vector<RewardSweepRow> reward_sweep(const CellCache& cell, const PipelineConfig& config,
                                         const std::vector<double>& alphas = {0.5, 0.65, 0.8},
                                         const std::vector<double>& quantiles = {0.5, 0.75, 0.9});

/// Content-address for per-cell artifact directories: FNV-1a over the cache
/// payload combined with the config hash.
std::uint64_t cache_fingerprint(const CellCache& cell);
std::string cell_artifact_dirname(const CellCache& cell, const PipelineConfig& config);

std::string csv_escape(const std::string& s);

}  // namespace slicegraph
