#pragma once

#include "hiertrack/core.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hiertrack {

struct ScenarioConfig {
    int num_objects = 8;
    int num_frames = 150;
    double frame_width = 640.0;
    double frame_height = 480.0;
    double speed_min = 0.5;  // pixels per frame
    double speed_max = 3.0;
    double direction_change_prob = 0.02;
    double box_width_min = 20.0;
    double box_width_max = 40.0;
    double aspect_ratio = 2.5;  // height / width
    double gap_prob = 0.01;     // per object and frame, chance an occlusion starts
    int max_gap = 40;
    double dropout = 0.05;
    double jitter_std = 1.0;
    int embedding_dim = 32;
    double appearance_noise = 0.1;  // per-component std around the identity's unit base vector
    bool uniform_appearance = false;
    /// Boxes are rounded to multiples of this (0 keeps full precision).
    double box_quantum = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Scenario {
    std::vector<Detection> detections;  // sorted by (frame, identity); embedding_id = row index
    EmbeddingTable embeddings;          // raw, not normalized
};

/// Deterministic function of the config.
Scenario generate(const ScenarioConfig& config);

}  // namespace hiertrack
