#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace slicegraph {

/// Raised for malformed cache containers (bad magic, version, truncation).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised for structurally invalid inputs (duplicate run ids, oversized unit
/// indices, mismatched vector lengths).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Metric { jaccard, cosine, overlap };

inline std::string metric_name(Metric m) {
    switch (m) {
        case Metric::jaccard: return "jaccard";
        case Metric::cosine: return "cosine";
        case Metric::overlap: return "overlap";
    }
    return "jaccard";
}

inline Metric metric_from_name(const std::string& s) {
    if (s == "jaccard") return Metric::jaccard;
    if (s == "cosine") return Metric::cosine;
    if (s == "overlap") return Metric::overlap;
    throw ValidationError("unknown metric: " + s);
}

/// Cache aggregation and graph-construction knobs.  Defaults are the
/// canonical pipeline configuration.
struct AggregationConfig {
    int slice_size = 32;     ///< tokens per row
    int sep_up = 8;          ///< rows per analysed slice
    int global_topk = 2000;  ///< per-token retained neurons
    int slice_topk = 500;    ///< per-row retained neurons
    int k_neighbors = 6;     ///< mutual-kNN k
    double sigma = 0.35;     ///< RBF scale for edge weights
    int size_cap = 2600;     ///< max slices per cell

    void validate() const {
        if (slice_size <= 0 || sep_up <= 0 || global_topk <= 0 ||
            slice_topk <= 0 || k_neighbors <= 0 || sigma <= 0.0 ||
            size_cap <= 0) {
            throw ValidationError("AggregationConfig fields must be strictly positive");
        }
    }
};

/// Block-role thresholds; defaults follow the five-role assignment rule.
struct RoleThresholds {
    double trunk_coverage = 0.4;   ///< c_b threshold for shared_trunk
    int min_region_size = 6;       ///< |b| floor for trunk/basin clauses
    double q_trunk = 0.5;          ///< medpos ceiling for shared_trunk
    double q_basin = 0.5;          ///< medpos floor for basins
    double basin_purity = 0.6;     ///< modal-answer purity floor
    int basin_min_runs = 3;        ///< unique-run floor for answer_basin
    int decision_max_size = 5;     ///< |b| ceiling for decision_point
};

/// Family-detection knobs.
struct FamilyConfig {
    double edge_threshold = 0.05;  ///< tau: min weighted Jaccard for an edge
    double resolution = 1.0;       ///< rho: Louvain resolution
    std::uint64_t seed = 42;
};

/// Reward-field knobs.
struct RewardConfig {
    double alpha = 0.65;           ///< seed retention per diffusion step
    int steps = 24;
    double core_quantile = 0.75;   ///< percentile over strictly positive field
};

}  // namespace slicegraph
