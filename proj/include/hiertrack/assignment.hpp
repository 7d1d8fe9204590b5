#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

namespace hiertrack {

/// Minimum-cost assignment on a dense rectangular cost matrix (Hungarian method with potentials).
/// Every row is assigned when rows <= cols, otherwise every column. Returns col index per row, -1 if unassigned.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Maximum-weight bipartite matching over sparse weighted edges (left, right, weight).
/// Non-positive weights are never selected. Returns indices into `edges` of the chosen edges, ascending.
struct WeightedPair {
    int left = 0;
    int right = 0;
    double weight = 0.0;
};
std::vector<std::size_t> max_weight_matching(int num_left, int num_right, const std::vector<WeightedPair>& edges);

/// Minimum-cost matching that first maximizes the number of matched pairs; pairs absent from `edges`
/// are unmatchable. Costs must lie in [0, 1].
std::vector<std::size_t> min_cost_max_cardinality_matching(int num_left, int num_right,
                                                           const std::vector<WeightedPair>& edges);

}  // namespace hiertrack
