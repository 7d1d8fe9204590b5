#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/hierarchy.hpp"
#include "hiertrack/stitching.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hiertrack {

/// One row of a trajectory file (prediction or ground truth).
struct TrackRow {
    int frame = 0;
    int identity = 0;
    Box box;
    double confidence = 1.0;
    int class_id = 0;
    bool interpolated = false;
};

std::vector<TrackRow> to_rows(std::span<const Trajectory> trajectories);
/// Ground-truth rows from labeled detections; unlabeled detections are skipped.
std::vector<TrackRow> gt_rows(std::span<const Detection> detections);

struct EvalOptions {
    double iou_threshold = 0.5;
    /// Interpolated predictions are scored only when the ground truth also covers unobserved frames.
    bool include_interpolated = false;
};

struct SequenceReport {
    std::string name;
    double idf1 = 0.0;
    std::int64_t idtp = 0;
    std::int64_t idfp = 0;
    std::int64_t idfn = 0;
    std::int64_t id_switches = 0;
};

struct EvalReport {
    double idf1 = 0.0;
    std::int64_t idtp = 0;
    std::int64_t idfp = 0;
    std::int64_t idfn = 0;
    std::int64_t id_switches = 0;
    std::vector<SequenceReport> sequences;

    /// key=value lines.
    std::string to_text() const;
    /// Header plus one row per sequence and a final "all" row.
    std::string to_csv() const;
};

/// Identity F1 under the optimal one-to-one identity matching. Throws Error(InvalidInput) on empty gt.
EvalReport idf1(std::span<const TrackRow> predicted, std::span<const TrackRow> gt, const EvalOptions& options = {});

/// Frames where a gt identity's matched prediction differs from its previous match.
std::int64_t id_switches(std::span<const TrackRow> predicted, std::span<const TrackRow> gt,
                         const EvalOptions& options = {});

/// Sums the counts of several sequences and recomputes IDF1.
EvalReport combine(std::vector<SequenceReport> sequences);

struct LevelStats {
    std::int64_t graphs = 0;
    std::int64_t nodes = 0;
    std::int64_t edges = 0;
    std::int64_t positives = 0;
    double positive_ratio() const { return edges == 0 ? 0.0 : static_cast<double>(positives) / edges; }
};

struct HierarchyStats {
    std::vector<LevelStats> levels;
    /// Graphs whose positive count exceeded twice their node count.
    std::int64_t bound_violations = 0;
    double oracle_idf1 = 0.0;

    std::int64_t total_edges() const;
    std::int64_t total_positives() const;
    double positive_ratio() const;
};

/// Collects per-level edge and label counts as a graph observer.
class EdgeStatsCollector {
public:
    explicit EdgeStatsCollector(int num_levels) { stats_.levels.resize(static_cast<std::size_t>(num_levels)); }
    void observe(const AssociationGraph& graph);
    GraphObserver observer();
    const HierarchyStats& stats() const { return stats_; }

private:
    HierarchyStats stats_;
};

/// Edge statistics of a set of labeled (or label-assignable) graphs.
HierarchyStats edge_stats(std::span<const AssociationGraph> graphs, int num_levels);

/// Runs the windowed hierarchy with ground-truth labels as scores and reports the resulting IDF1
/// together with per-level edge and label counts.
HierarchyStats oracle_upper_bound(std::span<const Detection> detections, const EmbeddingTable& embeddings,
                                  const HierarchyConfig& config, const WindowPlan& plan);

}  // namespace hiertrack
