#include "hiertrack/hierarchy.hpp"

#include "hiertrack/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace hiertrack {

std::vector<std::vector<Window>> partition_clip(int clip_start, int clip_end, const HierarchyConfig& config) {
    std::vector<std::vector<Window>> levels;
    levels.reserve(config.level_window_sizes.size());
    for (int size : config.level_window_sizes) {
        std::vector<Window> windows;
        for (int s = clip_start; s < clip_end; s += size) windows.push_back({s, std::min(s + size, clip_end)});
        levels.push_back(std::move(windows));
    }
    return levels;
}

namespace {

double center_distance(const Box& a, const Box& b) { return std::hypot(a.cx() - b.cx(), a.cy() - b.cy()); }

}  // namespace

double pruning_distance(const Tracklet& u, const Tracklet& v, int level, const HierarchyConfig& config) {
    // u ends before v starts, so u's last and v's first boxes are the temporally closest pair.
    const Box& a = u.last().box;
    const Box& b = v.first().box;
    if (level == 0) return center_distance(a, b);
    const double app = appearance_distance(u, v);
    const auto motion = motion_consistency(u, v);
    const double motion_term = motion ? 1.0 - *motion : center_distance(a, b) / (0.5 * (a.h + b.h));
    return config.lambda_mix * app + (1.0 - config.lambda_mix) * motion_term;
}

AssociationGraph build_graph(std::vector<Tracklet> nodes, int level, Window window, const HierarchyConfig& config) {
    AssociationGraph g;
    g.level = level;
    g.window = window;
    g.nodes = std::move(nodes);
    const int n = static_cast<int>(g.nodes.size());
    const auto k = static_cast<std::size_t>(std::max(config.knn_k, 0));

    std::vector<std::pair<int, int>> kept;
    std::vector<std::pair<double, int>> candidates;
    for (int i = 0; i < n && k > 0; ++i) {
        candidates.clear();
        const Tracklet& ti = g.nodes[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            const Tracklet& tj = g.nodes[static_cast<std::size_t>(j)];
            if (ti.t_end() < tj.t_start()) {
                candidates.emplace_back(pruning_distance(ti, tj, level, config), j);
            } else if (tj.t_end() < ti.t_start()) {
                candidates.emplace_back(pruning_distance(tj, ti, level, config), j);
            }
        }
        if (candidates.size() > k) {
            std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                             candidates.end());
            candidates.resize(k);
        }
        for (const auto& [dist, j] : candidates) {
            const bool i_first = ti.t_end() < g.nodes[static_cast<std::size_t>(j)].t_start();
            kept.emplace_back(i_first ? i : j, i_first ? j : i);
        }
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

    g.edges.reserve(kept.size());
    g.features.reserve(kept.size());
    for (const auto& [u, v] : kept) {
        g.edges.push_back({u, v});
        g.features.push_back(
            compute_edge_features(g.nodes[static_cast<std::size_t>(u)], g.nodes[static_cast<std::size_t>(v)]));
    }
    return g;
}

std::vector<int> assign_edge_labels(const AssociationGraph& graph) {
    std::vector<int> labels(graph.num_edges(), 0);
    std::map<std::pair<int, int>, std::size_t> edge_index;
    for (std::size_t e = 0; e < graph.edges.size(); ++e) edge_index[{graph.edges[e].u, graph.edges[e].v}] = e;

    std::map<int, std::vector<int>> by_identity;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        if (auto id = graph.nodes[i].identity()) by_identity[*id].push_back(static_cast<int>(i));
    }
    for (auto& [id, members] : by_identity) {
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            const auto& ta = graph.nodes[static_cast<std::size_t>(a)];
            const auto& tb = graph.nodes[static_cast<std::size_t>(b)];
            if (ta.t_start() != tb.t_start()) return ta.t_start() < tb.t_start();
            return a < b;
        });
        for (std::size_t m = 1; m < members.size(); ++m) {
            const int a = members[m - 1];
            const int b = members[m];
            if (graph.nodes[static_cast<std::size_t>(a)].t_end() >= graph.nodes[static_cast<std::size_t>(b)].t_start()) {
                continue;
            }
            if (auto it = edge_index.find({a, b}); it != edge_index.end()) labels[it->second] = 1;
        }
    }
    return labels;
}

void sort_tracklets(std::vector<Tracklet>& tracklets) {
    std::sort(tracklets.begin(), tracklets.end(), [](const Tracklet& a, const Tracklet& b) {
        if (a.t_start() != b.t_start()) return a.t_start() < b.t_start();
        return a.first().embedding_id < b.first().embedding_id;
    });
}

std::vector<Tracklet> merge_tracklets(const AssociationGraph& graph, std::span<const int> decisions,
                                      const EmbeddingTable& embeddings) {
    if (decisions.size() != graph.num_edges()) throw Error(ErrorKind::Contract, "decisions not aligned with edges");
    if (!is_feasible(graph.num_nodes(), graph.edges, decisions)) {
        throw Error(ErrorKind::Contract, "merge requested with decisions violating the degree constraints");
    }
    const std::size_t n = graph.num_nodes();
    std::vector<int> next(n, -1);
    std::vector<char> has_prev(n, 0);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        if (!decisions[e]) continue;
        next[static_cast<std::size_t>(graph.edges[e].u)] = graph.edges[e].v;
        has_prev[static_cast<std::size_t>(graph.edges[e].v)] = 1;
    }
    std::vector<Tracklet> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (has_prev[i]) continue;
        if (next[i] < 0) {
            out.push_back(graph.nodes[i]);
            continue;
        }
        std::vector<Detection> dets;
        for (int cur = static_cast<int>(i); cur >= 0; cur = next[static_cast<std::size_t>(cur)]) {
            const auto& part = graph.nodes[static_cast<std::size_t>(cur)].detections();
            dets.insert(dets.end(), part.begin(), part.end());
        }
        out.push_back(make_tracklet(std::move(dets), embeddings));
    }
    sort_tracklets(out);
    return out;
}

std::vector<double> oracle_scores(const AssociationGraph& graph) {
    const auto labels = graph.labels ? *graph.labels : assign_edge_labels(graph);
    return {labels.begin(), labels.end()};
}

std::vector<Tracklet> run_hierarchy(std::span<const Detection> detections, const EmbeddingTable& embeddings,
                                    Window clip, const HierarchyConfig& config, const EdgeScorer& scorer,
                                    const GraphObserver& observer) {
    const auto levels = partition_clip(clip.start, clip.end, config);
    std::vector<Tracklet> result;
    for (auto& group : split_by_class(detections)) {
        std::vector<Tracklet> tracklets;
        for (auto& d : group) {
            if (clip.contains(d.frame)) tracklets.push_back(make_tracklet({d}, embeddings));
        }
        sort_tracklets(tracklets);
        for (int level = 0; level < static_cast<int>(levels.size()); ++level) {
            const auto& windows = levels[static_cast<std::size_t>(level)];
            std::vector<std::vector<Tracklet>> buckets(windows.size());
            const int size = config.level_window_sizes[static_cast<std::size_t>(level)];
            for (auto& t : tracklets) {
                const auto w = static_cast<std::size_t>((t.t_start() - clip.start) / size);
                if (w >= windows.size() || !windows[w].contains(t.t_end())) {
                    throw Error(ErrorKind::Contract, "tracklet crosses a window boundary");
                }
                buckets[w].push_back(std::move(t));
            }
            std::vector<Tracklet> merged;
            for (std::size_t w = 0; w < windows.size(); ++w) {
                AssociationGraph graph = build_graph(std::move(buckets[w]), level, windows[w], config);
                std::vector<int> decisions;
                if (graph.num_edges() > 0) {
                    graph.scores = scorer(graph);
                    if (graph.scores->size() != graph.num_edges()) {
                        throw Error(ErrorKind::Contract, "scorer returned the wrong number of scores");
                    }
                    decisions = round_decisions(graph, *graph.scores);
                }
                if (observer) observer(graph, decisions);
                auto out = graph.num_edges() > 0 ? merge_tracklets(graph, decisions, embeddings) : std::move(graph.nodes);
                merged.insert(merged.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
            }
            sort_tracklets(merged);
            tracklets = std::move(merged);
        }
        result.insert(result.end(), std::make_move_iterator(tracklets.begin()),
                      std::make_move_iterator(tracklets.end()));
    }
    sort_tracklets(result);
    return result;
}

}  // namespace hiertrack
