#pragma once

#include "hiertrack/hierarchy.hpp"

#include <span>
#include <vector>

namespace hiertrack {

/// Nodes and selected edges that break the one-past / one-future limit after thresholding.
struct ViolatingSubgraph {
    std::vector<int> nodes;          // ascending node indices
    std::vector<std::size_t> edges;  // ascending edge indices
    bool empty() const { return edges.empty(); }
};

/// 1 iff score > 0.5.
std::vector<int> threshold_edges(std::span<const double> scores);

ViolatingSubgraph find_violations(std::size_t num_nodes, std::span<const GraphEdge> edges,
                                  std::span<const int> tentative);

/// Exact minimizer of sum y * (1 - 2 * score) over the violating edges subject to the degree limits.
/// Returns decisions aligned with `sub.edges`.
std::vector<int> project_feasible(const ViolatingSubgraph& sub, std::span<const GraphEdge> edges,
                                  std::span<const double> scores);

std::vector<int> round_decisions(std::size_t num_nodes, std::span<const GraphEdge> edges,
                                 std::span<const double> scores);
std::vector<int> round_decisions(const AssociationGraph& graph, std::span<const double> scores);

/// Every node has at most one selected past edge and one selected future edge.
bool is_feasible(std::size_t num_nodes, std::span<const GraphEdge> edges, std::span<const int> decisions);

}  // namespace hiertrack
