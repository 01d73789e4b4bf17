#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

namespace slicegraph {

/// Undirected weighted edges (a, b, w); self-loops allowed on aggregated
/// levels.  Node ids are 0..n-1.
using WeightedEdge = std::tuple<int, int, double>;

/// Weighted modularity with a resolution parameter, evaluated for a given
/// community assignment.
double weighted_modularity(int n, const std::vector<WeightedEdge>& edges,
                           const std::vector<int>& community, double resolution);

/// Seeded Louvain: order-shuffled local moves, graph aggregation, repeated
/// until no modularity improvement.  Deterministic for a fixed seed and
/// input order; isolated nodes become singleton communities.  Returns a
/// community id per node, relabelled to 0..C-1 by first appearance.
std::vector<int> louvain_communities(int n, const std::vector<WeightedEdge>& edges,
                                     double resolution, std::uint64_t seed);

}  // namespace slicegraph
