#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/hierarchy.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hiertrack {

/// Sliding windows over [0, sequence_end). Consecutive windows overlap by window_length - stride frames;
/// a tail shorter than a window becomes a full-length window ending at sequence_end.
struct WindowPlan {
    int window_length = 150;
    int stride = 75;
    std::vector<Window> windows;

    static WindowPlan make(int sequence_end, int window_length = 150, int stride = 75);
};

/// |A ∩ B| / |A ∪ B| over detection keys; 0 when both are empty.
double track_overlap_iou(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Matches tracks of two overlapping windows (detection keys already restricted to the overlap).
/// Cost 1 - IoU for pairs sharing a detection, others unmatchable. Returns per B track the matched A index or -1.
std::vector<int> stitch_pair(const std::vector<std::vector<std::size_t>>& tracks_a,
                             const std::vector<std::vector<std::size_t>>& tracks_b);

/// Runs the hierarchy on every window, stitches left to right and interpolates gaps.
/// Identities are numbered from 1 in order of first appearance.
std::vector<Trajectory> track_sequence(std::span<const Detection> detections, const EmbeddingTable& embeddings,
                                       const HierarchyConfig& config, const WindowPlan& plan,
                                       const EdgeScorer& scorer, const GraphObserver& observer = {},
                                       int threads = 1, bool interpolate = true);

/// Fills internal frame gaps by per-coordinate linear interpolation; inserted rows are flagged.
Trajectory interpolate_gaps(const Trajectory& trajectory);

}  // namespace hiertrack
