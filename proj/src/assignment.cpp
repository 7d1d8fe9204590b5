#include "hiertrack/assignment.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace hiertrack {

namespace {

// Rows <= cols. Classic O(n^2 m) shortest augmenting path with dual potentials.
std::vector<int> hungarian_wide(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(a.cols());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
    if (cost.rows() == 0 || cost.cols() == 0) return std::vector<int>(static_cast<std::size_t>(cost.rows()), -1);
    if (cost.rows() <= cost.cols()) return hungarian_wide(cost);
    const std::vector<int> col_to_row = hungarian_wide(cost.transpose());
    std::vector<int> row_to_col(static_cast<std::size_t>(cost.rows()), -1);
    for (std::size_t c = 0; c < col_to_row.size(); ++c) {
        if (col_to_row[c] >= 0) row_to_col[static_cast<std::size_t>(col_to_row[c])] = static_cast<int>(c);
    }
    return row_to_col;
}

namespace {

std::vector<std::size_t> match_with_costs(int num_left, int num_right, const std::vector<WeightedPair>& edges,
                                          double (*to_cost)(double), bool skip_nonpositive) {
    if (num_left == 0 || num_right == 0 || edges.empty()) return {};
    // Keep the best parallel edge per (left, right) pair.
    std::map<std::pair<int, int>, std::size_t> best;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& we = edges[e];
        if (skip_nonpositive && we.weight <= 0.0) continue;
        auto [it, inserted] = best.try_emplace({we.left, we.right}, e);
        if (!inserted && to_cost(edges[it->second].weight) > to_cost(we.weight)) it->second = e;
    }
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(num_left, num_right);
    for (const auto& [key, e] : best) cost(key.first, key.second) = to_cost(edges[e].weight);
    const auto row_to_col = solve_assignment(cost);
    std::vector<std::size_t> chosen;
    for (int r = 0; r < num_left; ++r) {
        const int c = row_to_col[static_cast<std::size_t>(r)];
        if (c < 0) continue;
        auto it = best.find({r, c});
        if (it != best.end()) chosen.push_back(it->second);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

std::vector<std::size_t> max_weight_matching(int num_left, int num_right, const std::vector<WeightedPair>& edges) {
    // Absent pairs cost 0, edges cost -weight: a perfect assignment of minimum cost is a maximum-weight matching.
    return match_with_costs(num_left, num_right, edges, [](double w) { return -w; }, true);
}

std::vector<std::size_t> min_cost_max_cardinality_matching(int num_left, int num_right,
                                                           const std::vector<WeightedPair>& edges) {
    // Each real pair is worth (size + 1) - cost > size, so any extra matched pair dominates all cost savings.
    const double bonus = static_cast<double>(std::max(num_left, num_right)) + 1.0;
    std::vector<WeightedPair> shifted(edges);
    for (auto& e : shifted) e.weight = bonus - e.weight;
    return max_weight_matching(num_left, num_right, shifted);
}

}  // namespace hiertrack
