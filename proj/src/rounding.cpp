#include "hiertrack/rounding.hpp"

#include "hiertrack/assignment.hpp"

#include <algorithm>
#include <numeric>

namespace hiertrack {

std::vector<int> threshold_edges(std::span<const double> scores) {
    std::vector<int> out(scores.size());
    std::transform(scores.begin(), scores.end(), out.begin(), [](double s) { return s > 0.5 ? 1 : 0; });
    return out;
}

namespace {

void check_aligned(std::size_t edges, std::size_t values) {
    if (edges != values) throw Error(ErrorKind::Contract, "decision/score vector not aligned with edges");
}

}  // namespace

ViolatingSubgraph find_violations(std::size_t num_nodes, std::span<const GraphEdge> edges,
                                  std::span<const int> tentative) {
    check_aligned(edges.size(), tentative.size());
    std::vector<int> past(num_nodes, 0), future(num_nodes, 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!tentative[e]) continue;
        ++future[static_cast<std::size_t>(edges[e].u)];
        ++past[static_cast<std::size_t>(edges[e].v)];
    }
    ViolatingSubgraph sub;
    std::vector<char> bad(num_nodes, 0);
    for (std::size_t n = 0; n < num_nodes; ++n) {
        if (past[n] > 1 || future[n] > 1) {
            bad[n] = 1;
            sub.nodes.push_back(static_cast<int>(n));
        }
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (tentative[e] && (bad[static_cast<std::size_t>(edges[e].u)] || bad[static_cast<std::size_t>(edges[e].v)])) {
            sub.edges.push_back(e);
        }
    }
    return sub;
}

std::vector<int> project_feasible(const ViolatingSubgraph& sub, std::span<const GraphEdge> edges,
                                  std::span<const double> scores) {
    check_aligned(edges.size(), scores.size());
    std::vector<int> out(sub.edges.size(), 0);
    if (sub.edges.empty()) return out;

    // Connected components over the violating edges, solved independently.
    std::vector<int> nodes;
    for (std::size_t e : sub.edges) {
        nodes.push_back(edges[e].u);
        nodes.push_back(edges[e].v);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    auto local = [&](int node) {
        return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), node) - nodes.begin());
    };
    std::vector<int> parent(nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (std::size_t e : sub.edges) {
        const int a = find(local(edges[e].u));
        const int b = find(local(edges[e].v));
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }

    std::vector<std::vector<std::size_t>> components(nodes.size());
    for (std::size_t k = 0; k < sub.edges.size(); ++k) {
        components[static_cast<std::size_t>(find(local(edges[sub.edges[k]].u)))].push_back(k);
    }

    for (const auto& comp : components) {
        if (comp.empty()) continue;
        // Node split: the future side of u on the left, the past side of v on the right.
        std::vector<int> lefts, rights;
        for (std::size_t k : comp) {
            lefts.push_back(edges[sub.edges[k]].u);
            rights.push_back(edges[sub.edges[k]].v);
        }
        std::sort(lefts.begin(), lefts.end());
        lefts.erase(std::unique(lefts.begin(), lefts.end()), lefts.end());
        std::sort(rights.begin(), rights.end());
        rights.erase(std::unique(rights.begin(), rights.end()), rights.end());
        std::vector<WeightedPair> pairs;
        pairs.reserve(comp.size());
        for (std::size_t k : comp) {
            const auto& ge = edges[sub.edges[k]];
            pairs.push_back({static_cast<int>(std::lower_bound(lefts.begin(), lefts.end(), ge.u) - lefts.begin()),
                             static_cast<int>(std::lower_bound(rights.begin(), rights.end(), ge.v) - rights.begin()),
                             2.0 * scores[sub.edges[k]] - 1.0});
        }
        for (std::size_t chosen :
             max_weight_matching(static_cast<int>(lefts.size()), static_cast<int>(rights.size()), pairs)) {
            out[comp[chosen]] = 1;
        }
    }
    return out;
}

std::vector<int> round_decisions(std::size_t num_nodes, std::span<const GraphEdge> edges,
                                 std::span<const double> scores) {
    auto decisions = threshold_edges(scores);
    const auto sub = find_violations(num_nodes, edges, decisions);
    if (sub.empty()) return decisions;
    const auto projected = project_feasible(sub, edges, scores);
    for (std::size_t k = 0; k < sub.edges.size(); ++k) decisions[sub.edges[k]] = projected[k];
    return decisions;
}

std::vector<int> round_decisions(const AssociationGraph& graph, std::span<const double> scores) {
    return round_decisions(graph.num_nodes(), graph.edges, scores);
}

bool is_feasible(std::size_t num_nodes, std::span<const GraphEdge> edges, std::span<const int> decisions) {
    check_aligned(edges.size(), decisions.size());
    std::vector<int> past(num_nodes, 0), future(num_nodes, 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!decisions[e]) continue;
        if (++future[static_cast<std::size_t>(edges[e].u)] > 1) return false;
        if (++past[static_cast<std::size_t>(edges[e].v)] > 1) return false;
    }
    return true;
}

}  // namespace hiertrack
