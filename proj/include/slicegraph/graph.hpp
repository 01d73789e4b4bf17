#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicegraph/cache.hpp"
#include "slicegraph/config.hpp"

namespace slicegraph {

struct NodeId {
    std::int64_t run_id = 0;
    int slice_index = 0;
    auto operator<=>(const NodeId&) const = default;
};

struct Edge {
    int a = 0;  // node indices, a < b
    int b = 0;
    double distance = 0.0;
    double weight = 0.0;  // exp(-(d/sigma)^2), in (0,1]
};

/// Undirected weighted mutual-kNN graph over a cell's (capped) slices.
struct SliceGraph {
    std::vector<NodeId> nodes;
    std::vector<const SliceKeySet*> slices;  // parallel to nodes; borrowed from the cache
    std::vector<Edge> edges;                 // each unordered pair at most once
    Metric metric = Metric::jaccard;
    AggregationConfig config;

    std::vector<std::vector<int>> adjacency() const;
    int max_degree() const;
};

std::size_t intersection_size(const std::vector<NeuronKey>& a,
                              const std::vector<NeuronKey>& b);

/// Distance in [0,1] between two non-empty key sets under the chosen metric.
double set_distance(const SliceKeySet& a, const SliceKeySet& b, Metric metric);

double distance_from_counts(std::size_t inter, std::size_t size_a,
                            std::size_t size_b, Metric metric);

/// Deterministic stratified subsample to at most size_cap slices.  Strata are
/// (run_id x position-decile) buckets with largest-remainder allocation;
/// every run that had a slice keeps at least one.
std::vector<const SliceKeySet*> cap_slices(const CellCache& cell, int size_cap,
                                           std::uint64_t seed);

/// Builds the mutual-kNN graph over the capped slices.  Candidate lists are
/// each node's k smallest distances, ties to the lexicographically smaller
/// (run_id, slice_index); an edge survives iff mutual.  Requires >= 2 slices.
SliceGraph build_graph(const CellCache& cell, const AggregationConfig& config,
                       Metric metric, std::uint64_t seed = 0);

/// Candidate neighbor lists (indices into `slices`), one per node.
/// The parallel kernel uses an inverted key index; the serial reference does
/// pairwise merges.  Both are exact and produce identical lists.
std::vector<std::vector<int>> knn_candidates_parallel(
    const std::vector<const SliceKeySet*>& slices, int k, Metric metric);
std::vector<std::vector<int>> knn_candidates_serial(
    const std::vector<const SliceKeySet*>& slices, int k, Metric metric);

/// JSON export with node table, edge table, metric, and config hash.
std::string graph_to_json(const SliceGraph& g);
/// DOT export for visualization tooling.
std::string graph_to_dot(const SliceGraph& g);

std::uint64_t config_hash(const AggregationConfig& c, Metric metric);

}  // namespace slicegraph
