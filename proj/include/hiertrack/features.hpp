#pragma once

#include "hiertrack/core.hpp"

#include <array>
#include <optional>
#include <span>

namespace hiertrack {

/// Width of the network input produced by edge_feature_vector.
inline constexpr int kEdgeFeatureWidth = 8;

/// Pairwise association cues between an earlier tracklet u and a later tracklet v.
struct EdgeFeatures {
    std::array<double, 4> rel_pos{};  // dx, dy (height-normalized), log w-ratio, log h-ratio
    double time_dist = 0.0;           // frames
    double app_dist = 0.0;
    std::optional<double> motion_giou;
};

/// (2(x_u - x_v)/(h_u + h_v), 2(y_u - y_v)/(h_u + h_v), log(w_u/w_v), log(h_u/h_v)) from u's last and v's first box.
std::array<double, 4> position_features(const Tracklet& u, const Tracklet& v);

/// t_start(v) - t_end(u); throws if the tracklets are not strictly ordered in time.
double time_distance(const Tracklet& u, const Tracklet& v);

double appearance_distance(const Tracklet& u, const Tracklet& v);
double appearance_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Least-squares slope of box centers against frame; empty for fewer than two detections.
std::optional<Velocity> estimate_velocity(std::span<const Detection> detections);

double iou(const Box& a, const Box& b);
double giou(const Box& a, const Box& b);

/// GIoU of u's last box pushed forward and v's first box pushed backward to the temporal midpoint.
std::optional<double> motion_consistency(const Tracklet& u, const Tracklet& v);

EdgeFeatures compute_edge_features(const Tracklet& u, const Tracklet& v);

/// Raw 8-wide vector: rel_pos, time_dist, app_dist, motion_giou (0 if absent), motion presence flag.
std::array<double, kEdgeFeatureWidth> edge_feature_vector(const EdgeFeatures& f);
std::array<double, kEdgeFeatureWidth> edge_feature_vector(const Tracklet& u, const Tracklet& v);

/// Throws Error(InvalidInput) unless t_end(u) < t_start(v).
void require_ordered(const Tracklet& u, const Tracklet& v);

}  // namespace hiertrack
