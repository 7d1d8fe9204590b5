#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/hierarchy.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hiertrack {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Layer shapes of the shared network. Defaults give roughly 2.7e4 parameters.
struct ModelConfig {
    int node_dim = 32;
    int edge_dim = 16;
    int steps = 12;
    std::vector<int> level_window_sizes{5, 25, 75, 150};
    std::vector<int> edge_init_hidden{18, 18};
    std::vector<int> edge_hidden{80};
    std::vector<int> message_hidden{56};
    std::vector<int> node_hidden{};
    std::vector<int> class_hidden{8};
    /// Divide the time feature by the level's window size.
    bool normalize_time = true;

    int num_levels() const { return static_cast<int>(level_window_sizes.size()); }
    static ModelConfig from_hierarchy(const HierarchyConfig& h);
    void validate() const;

    /// key=value lines, stable order; used as the checkpoint's config echo.
    std::string to_text() const;
    static ModelConfig from_text(const std::string& text);
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct MlpLayer {
    Mat weight;  // in x out
    RowVec bias;
};

/// Activations retained by a batched forward pass; acts[0] is the input, acts[i] the output of layer i.
struct MlpCache {
    std::vector<Mat> acts;
};

/// Affine layers with ReLU between them; `activate_output` adds a ReLU after the last layer.
class Mlp {
public:
    Mlp() = default;
    Mlp(int in_dim, const std::vector<int>& hidden, int out_dim, bool activate_output);

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    bool activate_output() const { return activate_output_; }
    std::vector<MlpLayer>& layers() { return layers_; }
    const std::vector<MlpLayer>& layers() const { return layers_; }

    /// Single-sample evaluation; throws Error(InvalidInput) on width mismatch.
    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

    /// Batched evaluation, one sample per row.
    Mat forward(const Mat& input, MlpCache* cache = nullptr) const;

    /// Accumulates parameter gradients into `grads` and returns the gradient w.r.t. the input.
    Mat backward(const MlpCache& cache, Mat grad_output, Mlp& grads) const;

    std::size_t parameter_count() const;

private:
    int in_dim_ = 0;
    int out_dim_ = 0;
    bool activate_output_ = true;
    std::vector<MlpLayer> layers_;
};

/// Named view of one parameter tensor.
struct TensorRef {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::span<double> values;
};

/// All learnable state: MLPs shared by every level and step, plus one embedding per level.
struct ModelParams {
    ModelConfig config;
    Mlp edge_init;
    std::vector<RowVec> level_embeddings;
    Mlp edge_update;
    Mlp past_message;
    Mlp future_message;
    Mlp node_update;
    Mlp classifier;

    /// Uniform fan-in initialization for affine layers, zeros for level embeddings.
    static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);
    /// Same shapes, all zero.
    static ModelParams zeros(const ModelConfig& config);

    /// Tensors in declared (checkpoint) order.
    std::vector<TensorRef> tensors();
    std::size_t parameter_count() const;

    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    void add_scaled(const ModelParams& other, double factor);
};

/// Node ordering of a graph's edges (earlier endpoint first).
struct Topology {
    int num_nodes = 0;
    std::vector<int> src;
    std::vector<int> dst;
    static Topology of(const AssociationGraph& graph);
};

struct GraphState {
    Mat nodes;    // |V| x d_V
    Mat edges;    // |E| x d_E
    Mat initial;  // |E| x d_E, h^(0)
};

/// Per-step retained intermediates.
struct StepCache {
    MlpCache edge, past, future, node;
};

/// Everything backward needs from a forward pass.
struct ForwardTape {
    int level = 0;
    Topology topology;
    MlpCache init;
    std::vector<StepCache> steps;
    MlpCache classifier;
    Eigen::VectorXd logits;
    Eigen::VectorXd scores;
};

/// E x 8 network input; the time column is divided by the level's window size when enabled.
Mat network_inputs(const AssociationGraph& graph, const ModelConfig& config);

/// h^(0) = MLP_init(features) + level embedding. Throws Error(InvalidInput) for an out-of-range level.
Mat init_edge_embeddings(const Mat& features, int level, const ModelParams& params, MlpCache* cache = nullptr);

GraphState initial_state(const Topology& topology, Mat initial_edges, const ModelParams& params);

/// One round of edge update, time-directed messages and node update. `step` is 1-based.
GraphState message_passing_step(const GraphState& state, const Topology& topology, const ModelParams& params,
                                int step, StepCache* cache = nullptr);

/// Sigmoid of the classifier logit per edge.
Eigen::VectorXd classify_edges(const GraphState& state, const ModelParams& params, MlpCache* cache = nullptr,
                               Eigen::VectorXd* logits = nullptr);

/// Full pass for one graph. When `tape` is given, intermediates are retained for backward.
Eigen::VectorXd forward(const AssociationGraph& graph, const ModelParams& params, ForwardTape* tape = nullptr);

/// Gradients of a scalar loss given dLoss/dScore per edge.
ModelParams backward(const ForwardTape& tape, const ModelParams& params, std::span<const double> score_grads);

/// Same, given dLoss/dLogit per edge; accumulates into `grads`.
void backward_from_logits(const ForwardTape& tape, const ModelParams& params, std::span<const double> logit_grads,
                          ModelParams& grads);

/// Scores edges with a copy of the given parameters.
EdgeScorer network_scorer(const ModelParams& params);

/// Every edge gets the same score.
EdgeScorer constant_scorer(double score);

/// Optional optimizer moments stored alongside the weights.
struct OptimizerState {
    std::uint64_t step = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
};

struct Checkpoint {
    ModelParams params;
    std::uint64_t iteration = 0;
    std::optional<OptimizerState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Verifies magic, version and checksum; when `expected` is given the stored shapes must match it.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected = {});

}  // namespace hiertrack
