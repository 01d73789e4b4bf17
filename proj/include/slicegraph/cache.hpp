#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "slicegraph/config.hpp"

namespace slicegraph {

/// (layer, unit) packed as layer << 16 | unit.
using NeuronKey = std::uint32_t;

inline NeuronKey make_neuron_key(std::uint32_t layer, std::uint32_t unit) {
    if (layer >= 0x10000u) throw ValidationError("layer index does not fit in 16 bits");
    if (unit >= 0x10000u) throw ValidationError("unit index does not fit in 16 bits");
    return (layer << 16) | unit;
}

inline std::uint32_t key_layer(NeuronKey k) { return k >> 16; }
inline std::uint32_t key_unit(NeuronKey k) { return k & 0xFFFFu; }

/// One analysed slice: a strictly increasing, duplicate-free key set.
struct SliceKeySet {
    std::int64_t run_id = 0;
    int slice_index = 0;
    std::vector<NeuronKey> keys;  // sorted, size <= slice_topk
};

struct RunRecord {
    std::int64_t run_id = 0;
    std::vector<SliceKeySet> slices;  // slice_index consecutive from 0
    bool correct = false;
    std::string answer_class;  // normalized final answer, supplied by the corpus
};

struct CellId {
    std::string problem_id;
    std::string model_id;
    bool operator==(const CellId&) const = default;
};

/// Per-cell store of runs; immutable after load.
struct CellCache {
    CellId cell_id;
    std::vector<RunRecord> runs;
    AggregationConfig config;
    int dropped_runs = 0;    // runs with no admitted slice
    int dropped_slices = 0;  // empty slices removed at ingestion

    std::size_t total_slices() const {
        std::size_t n = 0;
        for (const auto& r : runs) n += r.slices.size();
        return n;
    }
};

using ScoredKey = std::pair<NeuronKey, double>;

/// Gating nonlinearity hook; defaults to SiLU.
using GateFn = std::function<double(double)>;
double silu(double x);

/// Scores one token's neurons at one layer by the positive part of the
/// post-gating contribution max(0, phi(gate_j) * up_j) and keeps the
/// global_topk largest, ties to the smaller unit index.  Zero scores never
/// survive.
std::vector<ScoredKey> score_token_activations(const std::vector<double>& up,
                                               const std::vector<double>& gate,
                                               std::uint32_t layer,
                                               int global_topk,
                                               const GateFn& phi = silu);

/// Groups per-token scored keys into slice_size-token rows, keeps the
/// slice_topk largest-mass keys per row, then merges every sep_up consecutive
/// rows by key-mass sum and re-truncates.  A trailing partial row/slice is
/// kept.  Empty merged slices are not emitted here; ingestion drops them.
std::vector<SliceKeySet> aggregate_rows(
    const std::vector<std::vector<ScoredKey>>& token_scores,
    const AggregationConfig& config);

/// Assembles a cell from aggregated runs: drops empty slices, renumbers
/// slice indices consecutively, drops runs left with no slice, and records
/// both counters.  Rejects duplicate run ids.
CellCache assemble_cell(CellId id, AggregationConfig config,
                        std::vector<RunRecord> runs);

/// Binary container: "SLGCACHE" magic, version byte 1, length-prefixed JSON
/// manifest, then per-run blocks of per-slice LE u32 key arrays with u32
/// length prefixes.
void write_cache(const CellCache& cell, const std::string& path);
CellCache read_cache(const std::string& path);

/// Plain-JSON sidecar of the same content, for debugging.
void write_cache_json(const CellCache& cell, const std::string& path);
CellCache read_cache_json(const std::string& path);

}  // namespace slicegraph
