#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/hierarchy.hpp"
#include "hiertrack/mpn.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hiertrack {

struct TrainConfig {
    double learning_rate = 3e-4;
    double weight_decay = 1e-4;
    int batch_clips = 8;
    int epochs = 100;
    double focal_gamma = 1.0;
    int unfreeze_interval = 750;
    std::uint64_t seed = 0;
    /// Stop after this many optimizer steps in total; 0 means run all epochs.
    std::uint64_t max_iterations = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// y = 1: -(1-p)^gamma log p; y = 0: -p^gamma log(1-p). Throws Error(InvalidInput) unless 0 < p < 1.
double focal_loss(double p, int y, double gamma);

/// Focal loss and its derivative expressed through the logit, stable for saturated scores.
double focal_loss_from_logit(double logit, int y, double gamma);
double focal_grad_logit(double logit, int y, double gamma);

struct LevelScores {
    std::vector<double> scores;
    std::vector<int> labels;
};

/// Sum over active levels of the mean focal loss of that level's edges; empty levels contribute 0.
double clip_loss(std::span<const LevelScores> levels, std::span<const int> active_levels, double gamma);

/// Zero-based indices of the levels receiving loss at `iteration`: 0 .. min(L, 1 + iteration / M) - 1.
std::vector<int> unfreeze_schedule(std::uint64_t iteration, int interval, int num_levels);

/// One training clip: detections (with ground truth) of a frame interval of a sequence.
struct TrainingClip {
    std::vector<Detection> detections;
    std::shared_ptr<const EmbeddingTable> embeddings;
    Window window;
};

struct ClipGradient {
    ModelParams grads;
    std::vector<double> level_loss;
    std::vector<std::size_t> level_edges;
    double loss = 0.0;
};

/// Runs the whole hierarchy on one clip with network scores, rounding between levels, and returns the
/// gradient of the clip loss.
ClipGradient clip_gradient(const TrainingClip& clip, const ModelParams& params, const HierarchyConfig& hierarchy,
                           std::span<const int> active_levels, double gamma);

struct StepReport {
    std::uint64_t iteration = 0;
    std::vector<int> active_levels;
    std::vector<double> level_loss;
    double total_loss = 0.0;

    /// One structured log line: iteration, active levels (1-based), per-level and total loss.
    std::string to_log_line() const;
};

/// AdamW update with bias correction. Returns the batch-mean loss report.
StepReport train_step(std::span<const TrainingClip* const> batch, ModelParams& params, OptimizerState& optimizer,
                      std::uint64_t iteration, const TrainConfig& train, const HierarchyConfig& hierarchy,
                      int threads = 1);

/// Applies one AdamW step with the given gradient.
void adam_update(ModelParams& params, const ModelParams& grads, OptimizerState& optimizer, const TrainConfig& train);

/// Full training loop starting at `start_iteration`; `on_step` sees each report.
struct TrainingResult {
    std::uint64_t iteration = 0;
    std::vector<StepReport> reports;
};
TrainingResult train(std::span<const TrainingClip> clips, ModelParams& params, OptimizerState& optimizer,
                     std::uint64_t start_iteration, const TrainConfig& train, const HierarchyConfig& hierarchy,
                     int threads = 1, const std::function<void(const StepReport&)>& on_step = {});

/// Total optimizer steps the loop would run for this many clips.
std::uint64_t planned_iterations(std::size_t num_clips, const TrainConfig& train);

/// Splits a labeled sequence into consecutive non-overlapping clips of `clip_length` frames.
std::vector<TrainingClip> make_clips(std::span<const Detection> detections,
                                     std::shared_ptr<const EmbeddingTable> embeddings, int clip_length);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. Results must be written to per-index slots.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace hiertrack
