#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicegraph/atlas.hpp"
#include "slicegraph/cache.hpp"
#include "slicegraph/dynamics.hpp"
#include "slicegraph/families.hpp"
#include "slicegraph/graph.hpp"

namespace slicegraph {

enum class NullKind {
    degree_rewire,
    blocktype_rewire,
    family_label_shuffle,
    temporal_shuffle,
    label_permutation,
};

std::string null_kind_name(NullKind kind);

struct NullSpec {
    NullKind kind = NullKind::family_label_shuffle;
    int shuffles = 0;  // 0 -> per-kind default
    std::uint64_t seed = 0;

    int effective_shuffles() const;  // rewires 3, family/temporal 200, labels 100
};

/// Summary of one real statistic against its shuffle distribution.
struct NullResult {
    double real = 0.0;
    double null_mean = 0.0;
    double null_sd = 0.0;
    double p95 = 0.0;  // inclusive order statistic
    double z = 0.0;
    bool above_p95 = false;
    int shuffles = 0;
};

NullResult summarize_null(double real, const std::vector<double>& null_values);

/// Double-edge-swap chain with 10x|E| attempts; self-loops and multi-edges
/// rejected, edge weights ride along with the swapped endpoints.  Sets
/// `identity` when no swap landed.
struct RewiredGraph {
    SliceGraph graph;
    bool identity = false;
    long accepted_swaps = 0;
};
RewiredGraph degree_preserving_rewire(const SliceGraph& graph, std::uint64_t seed);

/// Role labels permuted within (size-band, coverage-band) strata; the
/// decomposition and every non-role field are untouched.
BlockAtlas blocktype_preserving_rewire(const BlockAtlas& atlas, std::uint64_t seed);
int size_band(int block_size);
int coverage_band(double coverage);

/// Run->family assignment permuted uniformly; family-size multiset preserved.
FamilyPartition family_label_shuffle(const FamilyPartition& partition, std::uint64_t seed);

/// Per-run non-terminal state order permuted, duplicates re-compacted,
/// terminal re-appended.  Alphabet unchanged.
TypedSequences temporal_shuffle(const TypedSequences& sequences,
                                const std::vector<TypedState>& alphabet, std::uint64_t seed);

/// Correctness labels (with their answer classes) permuted across runs;
/// slices untouched so graph, atlas, and partition stay fixed.
CellCache label_permutation(const CellCache& cell, std::uint64_t seed);

struct BootstrapCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int B = 0;
};

/// Problem-clustered bootstrap of the mean: resample problems with
/// replacement, pool the cells of sampled problems, percentile 2.5 / 97.5
/// endpoints via the inclusive order statistic ceil(q * B).
BootstrapCi clustered_bootstrap(const std::vector<double>& values,
                                const std::vector<int>& problem_ids, int B = 1000,
                                std::uint64_t seed = 0);

/// Benjamini-Hochberg step-up at level q; returns per-input rejection flags.
std::vector<bool> bh_fdr(const std::vector<double>& p_values, double q);

}  // namespace slicegraph
