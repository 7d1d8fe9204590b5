#include "hiertrack/features.hpp"

#include <algorithm>
#include <cmath>

namespace hiertrack {

void require_ordered(const Tracklet& u, const Tracklet& v) {
    if (u.t_end() >= v.t_start()) {
        throw Error(ErrorKind::InvalidInput, "tracklets overlap in time (u ends at " + std::to_string(u.t_end()) +
                                                 ", v starts at " + std::to_string(v.t_start()) + ")");
    }
}

std::array<double, 4> position_features(const Tracklet& u, const Tracklet& v) {
    require_ordered(u, v);
    const Box& a = u.last().box;
    const Box& b = v.first().box;
    const double h_sum = a.h + b.h;
    return {2.0 * (a.x - b.x) / h_sum, 2.0 * (a.y - b.y) / h_sum, std::log(a.w / b.w), std::log(a.h / b.h)};
}

double time_distance(const Tracklet& u, const Tracklet& v) {
    require_ordered(u, v);
    return static_cast<double>(v.t_start() - u.t_end());
}

double appearance_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::InvalidInput, "appearance vectors differ in dimension (" + std::to_string(a.size()) +
                                                 " vs " + std::to_string(b.size()) + ")");
    }
    return (a - b).norm();
}

double appearance_distance(const Tracklet& u, const Tracklet& v) {
    return appearance_distance(u.avg_embedding(), v.avg_embedding());
}

std::optional<Velocity> estimate_velocity(std::span<const Detection> detections) {
    if (detections.size() < 2) return std::nullopt;
    const double n = static_cast<double>(detections.size());
    double mt = 0.0, mx = 0.0, my = 0.0;
    for (const auto& d : detections) {
        mt += d.frame;
        mx += d.box.cx();
        my += d.box.cy();
    }
    mt /= n;
    mx /= n;
    my /= n;
    double stt = 0.0, stx = 0.0, sty = 0.0;
    for (const auto& d : detections) {
        const double dt = d.frame - mt;
        stt += dt * dt;
        stx += dt * (d.box.cx() - mx);
        sty += dt * (d.box.cy() - my);
    }
    // stt > 0 since frames are distinct
    return Velocity{stx / stt, sty / stt};
}

namespace {

void require_box(const Box& b) {
    if (!b.valid()) throw Error(ErrorKind::InvalidInput, "degenerate box (non-positive width or height)");
}

double intersection_area(const Box& a, const Box& b) {
    const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
}

}  // namespace

double iou(const Box& a, const Box& b) {
    require_box(a);
    require_box(b);
    const double inter = intersection_area(a, b);
    return inter / (a.area() + b.area() - inter);
}

double giou(const Box& a, const Box& b) {
    require_box(a);
    require_box(b);
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    const double cw = std::max(a.x + a.w, b.x + b.w) - std::min(a.x, b.x);
    const double ch = std::max(a.y + a.h, b.y + b.h) - std::min(a.y, b.y);
    const double enclosing = cw * ch;
    return inter / uni - (enclosing - uni) / enclosing;
}

std::optional<double> motion_consistency(const Tracklet& u, const Tracklet& v) {
    require_ordered(u, v);
    if (!u.velocity() || !v.velocity()) return std::nullopt;
    const double t_mid = 0.5 * static_cast<double>(v.t_start() - u.t_end());
    const Box& a = u.last().box;
    const Box& b = v.first().box;
    const Box forward = Box::from_center(a.cx() + t_mid * u.velocity()->vx, a.cy() + t_mid * u.velocity()->vy, a.w, a.h);
    const Box backward = Box::from_center(b.cx() - t_mid * v.velocity()->vx, b.cy() - t_mid * v.velocity()->vy, b.w, b.h);
    return giou(forward, backward);
}

EdgeFeatures compute_edge_features(const Tracklet& u, const Tracklet& v) {
    EdgeFeatures f;
    f.rel_pos = position_features(u, v);
    f.time_dist = time_distance(u, v);
    f.app_dist = appearance_distance(u, v);
    f.motion_giou = motion_consistency(u, v);
    return f;
}

std::array<double, kEdgeFeatureWidth> edge_feature_vector(const EdgeFeatures& f) {
    return {f.rel_pos[0], f.rel_pos[1], f.rel_pos[2], f.rel_pos[3], f.time_dist, f.app_dist,
            f.motion_giou.value_or(0.0), f.motion_giou ? 1.0 : 0.0};
}

std::array<double, kEdgeFeatureWidth> edge_feature_vector(const Tracklet& u, const Tracklet& v) {
    return edge_feature_vector(compute_edge_features(u, v));
}

}  // namespace hiertrack
