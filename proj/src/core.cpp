#include "hiertrack/core.hpp"

#include "hiertrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hiertrack {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Contract: return "ContractViolation";
    }
    return "Unknown";
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<float> values) : dim_(dim), values_(std::move(values)) {
    if (dim_ == 0 && !values_.empty()) {
        throw Error(ErrorKind::InvalidInput, "embedding table with zero dimension but non-empty values");
    }
    if (dim_ != 0 && values_.size() % dim_ != 0) {
        throw Error(ErrorKind::InvalidInput, "embedding values are not a multiple of the dimension");
    }
}

std::span<const float> EmbeddingTable::row(std::size_t i) const {
    if (i >= rows()) {
        throw Error(ErrorKind::InvalidInput,
                    "embedding id " + std::to_string(i) + " out of range (" + std::to_string(rows()) + " rows)");
    }
    return {values_.data() + i * dim_, dim_};
}

EmbeddingTable EmbeddingTable::normalized() const {
    std::vector<float> out(values_);
    for (std::size_t r = 0; r < rows(); ++r) {
        double sq = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) sq += double(out[r * dim_ + c]) * out[r * dim_ + c];
        if (sq <= 0.0) continue;
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t c = 0; c < dim_; ++c) out[r * dim_ + c] = static_cast<float>(out[r * dim_ + c] * inv);
    }
    return {dim_, std::move(out)};
}

void EmbeddingTable::append(std::span<const float> row) {
    if (dim_ == 0) dim_ = row.size();
    if (row.size() != dim_) throw Error(ErrorKind::InvalidInput, "embedding row has wrong dimension");
    values_.insert(values_.end(), row.begin(), row.end());
}

Tracklet make_tracklet(std::vector<Detection> detections, const EmbeddingTable& embeddings) {
    if (detections.empty()) throw Error(ErrorKind::InvalidInput, "tracklet needs at least one detection");
    for (std::size_t i = 1; i < detections.size(); ++i) {
        if (detections[i].frame <= detections[i - 1].frame) {
            std::ostringstream msg;
            msg << "tracklet detections must be strictly increasing in frame (frame " << detections[i].frame
                << " follows frame " << detections[i - 1].frame << ")";
            throw Error(ErrorKind::InvalidInput, msg.str());
        }
    }

    Tracklet t;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(embeddings.dim()));
    for (const auto& d : detections) {
        if (!d.box.valid()) throw Error(ErrorKind::InvalidInput, "detection box must have positive width and height");
        if (d.frame < 0) throw Error(ErrorKind::InvalidInput, "detection frame must be non-negative");
        const auto row = embeddings.row(d.embedding_id);
        for (std::size_t c = 0; c < row.size(); ++c) sum[static_cast<Eigen::Index>(c)] += row[c];
    }
    t.avg_embedding_ = sum / static_cast<double>(detections.size());
    t.velocity_ = estimate_velocity(detections);

    t.identity_ = detections.front().gt_identity;
    for (const auto& d : detections) {
        if (!d.gt_identity || d.gt_identity != t.identity_) {
            t.identity_.reset();
            break;
        }
    }
    t.detections_ = std::move(detections);
    return t;
}

void HierarchyConfig::validate(bool allow_zero_k) const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (level_window_sizes.empty()) fail("hierarchy.levels must list at least one window size");
    for (std::size_t i = 0; i < level_window_sizes.size(); ++i) {
        if (level_window_sizes[i] <= 0) fail("hierarchy.levels entries must be positive");
        if (i > 0) {
            if (level_window_sizes[i] <= level_window_sizes[i - 1]) fail("hierarchy.levels must be increasing");
            if (level_window_sizes[i] % level_window_sizes[i - 1] != 0) {
                fail("hierarchy.levels: each window size must divide the next (" +
                     std::to_string(level_window_sizes[i - 1]) + " does not divide " +
                     std::to_string(level_window_sizes[i]) + ")");
            }
        }
    }
    if (knn_k < (allow_zero_k ? 0 : 1)) fail("hierarchy.knn_k must be >= 1");
    if (!(lambda_mix >= 0.0 && lambda_mix <= 1.0)) fail("hierarchy.lambda must lie in [0, 1]");
    if (message_passing_steps < 1) fail("hierarchy.steps must be >= 1");
    if (node_dim < 1 || edge_dim < 1) fail("hierarchy.node_dim and hierarchy.edge_dim must be >= 1");
    if (embedding_dim < 1) fail("hierarchy.embedding_dim must be >= 1");
}

std::vector<std::vector<Detection>> split_by_class(std::span<const Detection> detections) {
    std::map<int, std::vector<Detection>> groups;
    for (const auto& d : detections) groups[d.class_id].push_back(d);
    std::vector<std::vector<Detection>> out;
    out.reserve(groups.size());
    for (auto& [cls, dets] : groups) out.push_back(std::move(dets));
    return out;
}

}  // namespace hiertrack
