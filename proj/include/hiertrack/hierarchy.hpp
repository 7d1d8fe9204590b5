#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/features.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hiertrack {

/// Half-open frame interval [start, end).
struct Window {
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
    bool contains(int frame) const { return frame >= start && frame < end; }
    friend bool operator==(const Window&, const Window&) = default;
};

/// Directed by time: `u` ends strictly before `v` starts.
struct GraphEdge {
    int u = 0;
    int v = 0;
    friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// One window of one hierarchy level. `level` is zero-based.
struct AssociationGraph {
    int level = 0;
    Window window;
    std::vector<Tracklet> nodes;
    std::vector<GraphEdge> edges;
    std::vector<EdgeFeatures> features;
    std::optional<std::vector<int>> labels;
    std::optional<std::vector<double>> scores;

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_edges() const { return edges.size(); }
};

/// Windows per level for the clip [clip_start, clip_end). The final window of every level is truncated
/// at clip_end when the clip is shorter than a multiple of the window size.
std::vector<std::vector<Window>> partition_clip(int clip_start, int clip_end, const HierarchyConfig& config);
inline std::vector<std::vector<Window>> partition_clip(int clip_start, const HierarchyConfig& config) {
    return partition_clip(clip_start, clip_start + config.clip_length(), config);
}

/// KNN pruning distance. Level 0 uses center distance of the temporally closest boxes; higher levels mix
/// appearance and motion with `lambda_mix`.
double pruning_distance(const Tracklet& u, const Tracklet& v, int level, const HierarchyConfig& config);

/// Candidate edges are all strictly time-ordered pairs; each node keeps its K nearest candidates and
/// the kept sets are unioned.
AssociationGraph build_graph(std::vector<Tracklet> nodes, int level, Window window, const HierarchyConfig& config);

/// 1 for edges joining consecutive same-identity nodes of this graph, 0 otherwise.
std::vector<int> assign_edge_labels(const AssociationGraph& graph);

/// Concatenates every path of selected edges into one tracklet. Throws Error(Contract) on infeasible decisions.
std::vector<Tracklet> merge_tracklets(const AssociationGraph& graph, std::span<const int> decisions,
                                      const EmbeddingTable& embeddings);

/// Produces per-edge probabilities for one graph.
using EdgeScorer = std::function<std::vector<double>(const AssociationGraph& graph)>;

/// Scores equal to ground-truth labels (perfect edge classification).
std::vector<double> oracle_scores(const AssociationGraph& graph);

/// Observes each graph after scoring and rounding, before merging.
using GraphObserver = std::function<void(const AssociationGraph& graph, std::span<const int> decisions)>;

/// Runs every level over one clip: build graphs, score, round, merge. Classes are processed independently.
/// Returns the final tracklets of the clip sorted by (t_start, first embedding id).
std::vector<Tracklet> run_hierarchy(std::span<const Detection> detections, const EmbeddingTable& embeddings,
                                    Window clip, const HierarchyConfig& config, const EdgeScorer& scorer,
                                    const GraphObserver& observer = {});

/// Canonical ordering of tracklet lists.
void sort_tracklets(std::vector<Tracklet>& tracklets);

}  // namespace hiertrack
