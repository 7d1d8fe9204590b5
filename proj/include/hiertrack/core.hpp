#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiertrack {

/// Error categories surfaced by the CLI as a machine-parsable class name.
enum class ErrorKind { InvalidInput, InvalidConfig, Io, Contract };

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Axis-aligned box, (x, y) is the top-left corner, sizes in pixels.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
    double area() const { return w * h; }
    bool valid() const { return w > 0.0 && h > 0.0; }

    static Box from_center(double cx, double cy, double w, double h) { return {cx - 0.5 * w, cy - 0.5 * h, w, h}; }

    friend bool operator==(const Box&, const Box&) = default;
};

struct Velocity {
    double vx = 0.0;
    double vy = 0.0;
};

/// One box observation. `embedding_id` is also the detection's unique key inside a sequence:
/// row i of the detection file and row i of the embedding table describe the same object.
struct Detection {
    int frame = 0;
    Box box;
    double confidence = 1.0;
    int class_id = 0;
    std::size_t embedding_id = 0;
    std::optional<int> gt_identity;
};

/// Row-major table of appearance vectors.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, std::vector<float> values);

    std::size_t dim() const { return dim_; }
    std::size_t rows() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
    std::span<const float> row(std::size_t i) const;
    const std::vector<float>& values() const { return values_; }

    /// Copy with every row scaled to unit length (zero rows stay zero).
    EmbeddingTable normalized() const;

    void append(std::span<const float> row);

private:
    std::size_t dim_ = 0;
    std::vector<float> values_;
};

/// A time-ordered group of detections treated as one graph node.
class Tracklet {
public:
    const std::vector<Detection>& detections() const { return detections_; }
    int t_start() const { return detections_.front().frame; }
    int t_end() const { return detections_.back().frame; }
    std::size_t size() const { return detections_.size(); }
    const Detection& first() const { return detections_.front(); }
    const Detection& last() const { return detections_.back(); }
    const Eigen::VectorXd& avg_embedding() const { return avg_embedding_; }
    const std::optional<Velocity>& velocity() const { return velocity_; }
    int class_id() const { return detections_.front().class_id; }

    /// Shared ground-truth identity of all members; empty if any member is unlabeled or identities mix.
    std::optional<int> identity() const { return identity_; }

private:
    friend Tracklet make_tracklet(std::vector<Detection> detections, const EmbeddingTable& embeddings);

    std::vector<Detection> detections_;
    Eigen::VectorXd avg_embedding_;
    std::optional<Velocity> velocity_;
    std::optional<int> identity_;
};

/// Validates ordering and builds the aggregated appearance and velocity.
Tracklet make_tracklet(std::vector<Detection> detections, const EmbeddingTable& embeddings);

struct HierarchyConfig {
    std::vector<int> level_window_sizes{5, 25, 75, 150};
    int knn_k = 15;
    double lambda_mix = 0.05;
    int message_passing_steps = 12;
    int node_dim = 32;
    int edge_dim = 16;
    int embedding_dim = 32;

    int num_levels() const { return static_cast<int>(level_window_sizes.size()); }
    int clip_length() const { return level_window_sizes.back(); }

    /// Throws Error(InvalidConfig). `allow_zero_k` admits the empty-graph point of edge-budget sweeps.
    void validate(bool allow_zero_k = false) const;
};

struct Trajectory {
    int identity = 0;
    std::vector<Detection> detections;
    std::vector<bool> interpolated;
};

/// Splits detections by class id, preserving order within each class.
std::vector<std::vector<Detection>> split_by_class(std::span<const Detection> detections);

}  // namespace hiertrack
