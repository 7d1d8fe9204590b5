#include "hiertrack/rounding.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

using namespace hiertrack;

namespace {

struct RandomGraph {
    std::size_t n = 0;
    std::vector<GraphEdge> edges;
    std::vector<double> scores;
};

// Time-ordered edges u < v; high-score edges are denser around a few hubs so violations are common.
RandomGraph random_graph(std::mt19937_64& rng, int n, double density) {
    std::uniform_real_distribution<double> u(0, 1);
    RandomGraph g;
    g.n = static_cast<std::size_t>(n);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (u(rng) < density) {
                g.edges.push_back({a, b});
                g.scores.push_back(u(rng));
            }
        }
    }
    return g;
}

double objective(std::span<const std::size_t> idx, std::span<const int> y, std::span<const double> s) {
    double v = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) v += y[k] * (1.0 - 2.0 * s[idx[k]]);
    return v;
}

double brute_projection(const ViolatingSubgraph& sub, std::span<const GraphEdge> edges, std::span<const double> s) {
    const std::size_t m = sub.edges.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<GraphEdge> local;
    for (auto e : sub.edges) local.push_back(edges[e]);
    int max_node = 0;
    for (const auto& e : local) max_node = std::max({max_node, e.u, e.v});
    for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
        std::vector<int> y(m);
        for (std::size_t k = 0; k < m; ++k) y[k] = static_cast<int>(mask >> k & 1ul);
        if (!is_feasible(static_cast<std::size_t>(max_node) + 1, local, y)) continue;
        best = std::min(best, objective(sub.edges, y, s));
    }
    return best;
}

}  // namespace

TEST(Rounding, ThresholdIsStrict) {
    const std::vector<double> s{0.5, 0.5000001, 0.2, 1.0};
    EXPECT_EQ(threshold_edges(s), (std::vector<int>{0, 1, 0, 1}));
}

TEST(Rounding, KeepsStrongerOfTwoFutureEdges) {
    const std::vector<GraphEdge> e{{0, 1}, {0, 2}};
    const std::vector<double> s{0.9, 0.7};
    EXPECT_EQ(round_decisions(3, e, s), (std::vector<int>{1, 0}));
    const std::vector<double> swapped{0.7, 0.9};
    EXPECT_EQ(round_decisions(3, e, swapped), (std::vector<int>{0, 1}));
}

TEST(Rounding, FeasibleInputUnchanged) {
    const std::vector<GraphEdge> e{{0, 1}, {1, 2}, {0, 2}};
    const std::vector<double> s{0.8, 0.9, 0.1};
    EXPECT_TRUE(find_violations(3, e, threshold_edges(s)).empty());
    EXPECT_EQ(round_decisions(3, e, s), (std::vector<int>{1, 1, 0}));
    EXPECT_TRUE(round_decisions(0, {}, {}).empty());
}

TEST(Rounding, ViolationContainsOnlyOffendingComponent) {
    const std::vector<GraphEdge> e{{0, 2}, {1, 2}, {3, 4}};
    const std::vector<int> y{1, 1, 1};
    const auto v = find_violations(5, e, y);
    EXPECT_EQ(v.edges, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(v.nodes, (std::vector<int>{2}));
}

TEST(Rounding, ProjectionMatchesBruteForce) {
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int trial = 0; checked < 200 && trial < 5000; ++trial) {
        auto g = random_graph(rng, 3 + trial % 6, 0.6);
        for (auto& s : g.scores) s = 0.5 + 0.5 * s;  // every edge tentatively selected
        const auto y = threshold_edges(g.scores);
        const auto sub = find_violations(g.n, g.edges, y);
        if (sub.empty() || sub.edges.size() > 16) continue;
        const auto proj = project_feasible(sub, g.edges, g.scores);
        ASSERT_EQ(proj.size(), sub.edges.size());
        EXPECT_NEAR(objective(sub.edges, proj, g.scores), brute_projection(sub, g.edges, g.scores), 1e-9);
        ++checked;
    }
    EXPECT_EQ(checked, 200);
}

TEST(Rounding, RandomGraphsAlwaysFeasible) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const auto g = random_graph(rng, 2 + trial % 25, 0.3);
        const auto d = round_decisions(g.n, g.edges, g.scores);
        EXPECT_TRUE(is_feasible(g.n, g.edges, d));
        // Rounding only ever removes edges.
        const auto t = threshold_edges(g.scores);
        for (std::size_t e = 0; e < d.size(); ++e) EXPECT_LE(d[e], t[e]);
    }
}

TEST(Rounding, ExactLabelsPassThrough) {
    const std::vector<GraphEdge> e{{0, 1}, {1, 3}, {2, 4}, {0, 3}};
    const std::vector<double> s{1, 1, 1, 0};
    EXPECT_EQ(round_decisions(5, e, s), (std::vector<int>{1, 1, 1, 0}));
}

TEST(Rounding, RejectsMismatchedSizes) {
    const std::vector<GraphEdge> e{{0, 1}};
    const std::vector<double> s{0.1, 0.2};
    EXPECT_THROW(round_decisions(2, e, s), Error);
}
