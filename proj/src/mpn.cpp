#include "hiertrack/mpn.hpp"

#include "hiertrack/text.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace hiertrack {

// ---------------------------------------------------------------------------------------------
// Configuration

ModelConfig ModelConfig::from_hierarchy(const HierarchyConfig& h) {
    ModelConfig c;
    c.node_dim = h.node_dim;
    c.edge_dim = h.edge_dim;
    c.steps = h.message_passing_steps;
    c.level_window_sizes = h.level_window_sizes;
    return c;
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (node_dim < 1 || edge_dim < 1) fail("model dimensions must be positive");
    if (steps < 1) fail("model.steps must be >= 1");
    if (level_window_sizes.empty()) fail("model needs at least one level");
    for (const auto* list : {&edge_init_hidden, &edge_hidden, &message_hidden, &node_hidden, &class_hidden}) {
        for (int w : *list) {
            if (w < 1) fail("hidden layer widths must be positive");
        }
    }
}

std::string ModelConfig::to_text() const {
    std::string out;
    auto line = [&](const char* key, const std::string& value) { out += std::string(key) + "=" + value + "\n"; };
    line("model.node_dim", std::to_string(node_dim));
    line("model.edge_dim", std::to_string(edge_dim));
    line("model.steps", std::to_string(steps));
    line("model.levels", text::format_int_list(level_window_sizes));
    line("model.edge_init_hidden", text::format_int_list(edge_init_hidden));
    line("model.edge_hidden", text::format_int_list(edge_hidden));
    line("model.message_hidden", text::format_int_list(message_hidden));
    line("model.node_hidden", text::format_int_list(node_hidden));
    line("model.class_hidden", text::format_int_list(class_hidden));
    line("model.normalize_time", normalize_time ? "true" : "false");
    return out;
}

ModelConfig ModelConfig::from_text(const std::string& content) {
    const auto kv = text::parse_key_values(content, "checkpoint config");
    auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw Error(ErrorKind::InvalidInput, std::string("checkpoint config lacks ") + key);
        return it->second;
    };
    ModelConfig c;
    c.node_dim = text::parse_int(get("model.node_dim"), "model.node_dim");
    c.edge_dim = text::parse_int(get("model.edge_dim"), "model.edge_dim");
    c.steps = text::parse_int(get("model.steps"), "model.steps");
    c.level_window_sizes = text::parse_int_list(get("model.levels"), "model.levels");
    c.edge_init_hidden = text::parse_int_list(get("model.edge_init_hidden"), "model.edge_init_hidden");
    c.edge_hidden = text::parse_int_list(get("model.edge_hidden"), "model.edge_hidden");
    c.message_hidden = text::parse_int_list(get("model.message_hidden"), "model.message_hidden");
    c.node_hidden = text::parse_int_list(get("model.node_hidden"), "model.node_hidden");
    c.class_hidden = text::parse_int_list(get("model.class_hidden"), "model.class_hidden");
    c.normalize_time = text::parse_bool(get("model.normalize_time"), "model.normalize_time");
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------------------------
// MLP

Mlp::Mlp(int in_dim, const std::vector<int>& hidden, int out_dim, bool activate_output)
    : in_dim_(in_dim), out_dim_(out_dim), activate_output_(activate_output) {
    int prev = in_dim;
    std::vector<int> widths(hidden);
    widths.push_back(out_dim);
    for (int w : widths) {
        layers_.push_back({Mat::Zero(prev, w), RowVec::Zero(w)});
        prev = w;
    }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
    if (input.size() != in_dim_) {
        throw Error(ErrorKind::InvalidInput, "MLP input width " + std::to_string(input.size()) + ", expected " +
                                                 std::to_string(in_dim_));
    }
    Mat x = input.transpose();
    return forward(x).row(0).transpose();
}

Mat Mlp::forward(const Mat& input, MlpCache* cache) const {
    if (input.cols() != in_dim_) {
        throw Error(ErrorKind::InvalidInput, "MLP input width " + std::to_string(input.cols()) + ", expected " +
                                                 std::to_string(in_dim_));
    }
    if (cache) {
        cache->acts.clear();
        cache->acts.reserve(layers_.size() + 1);
        cache->acts.push_back(input);
    }
    Mat x = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Mat y = x * layers_[i].weight;
        y.rowwise() += layers_[i].bias;
        if (i + 1 < layers_.size() || activate_output_) y = y.cwiseMax(0.0);
        if (cache) cache->acts.push_back(y);
        x = std::move(y);
    }
    return x;
}

Mat Mlp::backward(const MlpCache& cache, Mat grad, Mlp& grads) const {
    for (std::size_t i = layers_.size(); i-- > 0;) {
        if (i + 1 < layers_.size() || activate_output_) {
            grad = (cache.acts[i + 1].array() > 0.0).select(grad, 0.0);
        }
        grads.layers_[i].weight.noalias() += cache.acts[i].transpose() * grad;
        grads.layers_[i].bias += grad.colwise().sum();
        grad = (grad * layers_[i].weight.transpose()).eval();
    }
    return grad;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

// ---------------------------------------------------------------------------------------------
// Parameters

namespace {

ModelParams shaped(const ModelConfig& c) {
    c.validate();
    ModelParams p;
    p.config = c;
    const int msg_in = 2 * c.node_dim + 2 * c.edge_dim;
    p.edge_init = Mlp(kEdgeFeatureWidth, c.edge_init_hidden, c.edge_dim, true);
    p.level_embeddings.assign(static_cast<std::size_t>(c.num_levels()), RowVec::Zero(c.edge_dim));
    p.edge_update = Mlp(msg_in, c.edge_hidden, c.edge_dim, true);
    p.past_message = Mlp(msg_in, c.message_hidden, c.node_dim, true);
    p.future_message = Mlp(msg_in, c.message_hidden, c.node_dim, true);
    p.node_update = Mlp(2 * c.node_dim, c.node_hidden, c.node_dim, true);
    p.classifier = Mlp(c.edge_dim, c.class_hidden, 1, false);
    return p;
}

void collect(Mlp& mlp, const std::string& name, std::vector<TensorRef>& out) {
    for (std::size_t i = 0; i < mlp.layers().size(); ++i) {
        auto& l = mlp.layers()[i];
        const std::string prefix = name + "." + std::to_string(i);
        out.push_back({prefix + ".weight", static_cast<int>(l.weight.rows()), static_cast<int>(l.weight.cols()),
                       {l.weight.data(), static_cast<std::size_t>(l.weight.size())}});
        out.push_back({prefix + ".bias", 1, static_cast<int>(l.bias.size()),
                       {l.bias.data(), static_cast<std::size_t>(l.bias.size())}});
    }
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& config) { return shaped(config); }

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
    ModelParams p = shaped(config);
    std::mt19937_64 rng(seed);
    for (Mlp* mlp : {&p.edge_init, &p.edge_update, &p.past_message, &p.future_message, &p.node_update,
                     &p.classifier}) {
        for (auto& l : mlp->layers()) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.rows()));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = dist(rng);
            for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = dist(rng);
        }
    }
    return p;
}

std::vector<TensorRef> ModelParams::tensors() {
    std::vector<TensorRef> out;
    collect(edge_init, "edge_init", out);
    for (std::size_t l = 0; l < level_embeddings.size(); ++l) {
        out.push_back({"level_embedding." + std::to_string(l), 1, static_cast<int>(level_embeddings[l].size()),
                       {level_embeddings[l].data(), static_cast<std::size_t>(level_embeddings[l].size())}});
    }
    collect(edge_update, "edge_update", out);
    collect(past_message, "past_message", out);
    collect(future_message, "future_message", out);
    collect(node_update, "node_update", out);
    collect(classifier, "classifier", out);
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = edge_init.parameter_count() + edge_update.parameter_count() + past_message.parameter_count() +
                    future_message.parameter_count() + node_update.parameter_count() + classifier.parameter_count();
    for (const auto& e : level_embeddings) n += static_cast<std::size_t>(e.size());
    return n;
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& t : const_cast<ModelParams*>(this)->tensors()) out.insert(out.end(), t.values.begin(), t.values.end());
    return out;
}

void ModelParams::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw Error(ErrorKind::Contract, "flat parameter vector has wrong size");
    std::size_t pos = 0;
    for (auto& t : tensors()) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), t.values.size(), t.values.begin());
        pos += t.values.size();
    }
}

void ModelParams::add_scaled(const ModelParams& other, double factor) {
    auto mine = tensors();
    auto theirs = const_cast<ModelParams&>(other).tensors();
    if (mine.size() != theirs.size()) throw Error(ErrorKind::Contract, "parameter sets differ in shape");
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i].values.size() != theirs[i].values.size()) {
            throw Error(ErrorKind::Contract, "parameter sets differ in shape");
        }
        for (std::size_t k = 0; k < mine[i].values.size(); ++k) mine[i].values[k] += factor * theirs[i].values[k];
    }
}

// ---------------------------------------------------------------------------------------------
// Forward

Topology Topology::of(const AssociationGraph& graph) {
    Topology t;
    t.num_nodes = static_cast<int>(graph.num_nodes());
    t.src.reserve(graph.num_edges());
    t.dst.reserve(graph.num_edges());
    for (const auto& e : graph.edges) {
        t.src.push_back(e.u);
        t.dst.push_back(e.v);
    }
    return t;
}

Mat network_inputs(const AssociationGraph& graph, const ModelConfig& config) {
    if (graph.level < 0 || graph.level >= config.num_levels()) {
        throw Error(ErrorKind::InvalidInput, "graph level " + std::to_string(graph.level) + " outside the model's " +
                                                 std::to_string(config.num_levels()) + " levels");
    }
    const double time_scale =
        config.normalize_time ? 1.0 / config.level_window_sizes[static_cast<std::size_t>(graph.level)] : 1.0;
    Mat x(static_cast<Eigen::Index>(graph.num_edges()), kEdgeFeatureWidth);
    for (std::size_t e = 0; e < graph.features.size(); ++e) {
        auto v = edge_feature_vector(graph.features[e]);
        v[4] *= time_scale;
        for (int c = 0; c < kEdgeFeatureWidth; ++c) x(static_cast<Eigen::Index>(e), c) = v[static_cast<std::size_t>(c)];
    }
    return x;
}

Mat init_edge_embeddings(const Mat& features, int level, const ModelParams& params, MlpCache* cache) {
    if (level < 0 || level >= static_cast<int>(params.level_embeddings.size())) {
        throw Error(ErrorKind::InvalidInput, "level index " + std::to_string(level) + " out of range");
    }
    Mat h0 = params.edge_init.forward(features, cache);
    h0.rowwise() += params.level_embeddings[static_cast<std::size_t>(level)];
    return h0;
}

GraphState initial_state(const Topology& topology, Mat initial_edges, const ModelParams& params) {
    GraphState s;
    s.nodes = Mat::Zero(topology.num_nodes, params.config.node_dim);
    s.edges = initial_edges;
    s.initial = std::move(initial_edges);
    return s;
}

namespace {

// Row e: [first[a(e)], edge[e], initial[e], first[b(e)]].
Mat gather_message_input(const Mat& nodes, const Mat& edge, const Mat& initial, const std::vector<int>& a,
                         const std::vector<int>& b) {
    const Eigen::Index dv = nodes.cols();
    const Eigen::Index de = edge.cols();
    Mat x(edge.rows(), 2 * dv + 2 * de);
    for (Eigen::Index e = 0; e < edge.rows(); ++e) {
        x.row(e).segment(0, dv) = nodes.row(a[static_cast<std::size_t>(e)]);
        x.row(e).segment(dv, de) = edge.row(e);
        x.row(e).segment(dv + de, de) = initial.row(e);
        x.row(e).segment(dv + 2 * de, dv) = nodes.row(b[static_cast<std::size_t>(e)]);
    }
    return x;
}

// Inverse of gather_message_input.
void scatter_message_grad(const Mat& grad, const std::vector<int>& a, const std::vector<int>& b, Mat& d_nodes,
                          Mat* d_edge, Mat& d_initial) {
    const Eigen::Index dv = d_nodes.cols();
    const Eigen::Index de = d_initial.cols();
    for (Eigen::Index e = 0; e < grad.rows(); ++e) {
        d_nodes.row(a[static_cast<std::size_t>(e)]) += grad.row(e).segment(0, dv);
        if (d_edge) d_edge->row(e) += grad.row(e).segment(dv, de);
        d_initial.row(e) += grad.row(e).segment(dv + de, de);
        d_nodes.row(b[static_cast<std::size_t>(e)]) += grad.row(e).segment(dv + 2 * de, dv);
    }
}

}  // namespace

GraphState message_passing_step(const GraphState& state, const Topology& topology, const ModelParams& params,
                                int step, StepCache* cache) {
    if (step < 1) throw Error(ErrorKind::InvalidInput, "message passing steps are numbered from 1");
    const Eigen::Index dv = params.config.node_dim;
    GraphState next;
    next.initial = state.initial;

    const Mat edge_in = gather_message_input(state.nodes, state.edges, state.initial, topology.src, topology.dst);
    next.edges = params.edge_update.forward(edge_in, cache ? &cache->edge : nullptr);

    // Earlier endpoint sends along the past direction of the later node, and vice versa.
    const Mat past_in = gather_message_input(state.nodes, next.edges, state.initial, topology.src, topology.dst);
    const Mat future_in = gather_message_input(state.nodes, next.edges, state.initial, topology.dst, topology.src);
    const Mat past_msg = params.past_message.forward(past_in, cache ? &cache->past : nullptr);
    const Mat future_msg = params.future_message.forward(future_in, cache ? &cache->future : nullptr);

    Mat aggregated = Mat::Zero(topology.num_nodes, 2 * dv);
    for (std::size_t e = 0; e < topology.src.size(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        aggregated.row(topology.dst[e]).segment(0, dv) += past_msg.row(ei);
        aggregated.row(topology.src[e]).segment(dv, dv) += future_msg.row(ei);
    }
    next.nodes = params.node_update.forward(aggregated, cache ? &cache->node : nullptr);
    return next;
}

Eigen::VectorXd classify_edges(const GraphState& state, const ModelParams& params, MlpCache* cache,
                               Eigen::VectorXd* logits) {
    const Mat z = params.classifier.forward(state.edges, cache);
    Eigen::VectorXd scores(z.rows());
    for (Eigen::Index e = 0; e < z.rows(); ++e) scores[e] = 1.0 / (1.0 + std::exp(-z(e, 0)));
    if (logits) *logits = z.col(0);
    return scores;
}

Eigen::VectorXd forward(const AssociationGraph& graph, const ModelParams& params, ForwardTape* tape) {
    if (graph.num_edges() == 0) {
        if (tape) {
            *tape = ForwardTape{};
            tape->level = graph.level;
            tape->topology = Topology::of(graph);
        }
        return {};
    }
    const Topology topology = Topology::of(graph);
    const Mat features = network_inputs(graph, params.config);
    Mat h0 = init_edge_embeddings(features, graph.level, params, tape ? &tape->init : nullptr);
    GraphState state = initial_state(topology, std::move(h0), params);
    if (tape) {
        tape->level = graph.level;
        tape->steps.assign(static_cast<std::size_t>(params.config.steps), {});
    }
    for (int s = 1; s <= params.config.steps; ++s) {
        state = message_passing_step(state, topology, params, s,
                                     tape ? &tape->steps[static_cast<std::size_t>(s - 1)] : nullptr);
    }
    Eigen::VectorXd logits;
    Eigen::VectorXd scores = classify_edges(state, params, tape ? &tape->classifier : nullptr, &logits);
    if (tape) {
        tape->topology = topology;
        tape->logits = logits;
        tape->scores = scores;
    }
    return scores;
}

// ---------------------------------------------------------------------------------------------
// Backward

void backward_from_logits(const ForwardTape& tape, const ModelParams& params, std::span<const double> logit_grads,
                          ModelParams& grads) {
    const auto num_edges = static_cast<Eigen::Index>(tape.topology.src.size());
    if (static_cast<Eigen::Index>(logit_grads.size()) != num_edges) {
        throw Error(ErrorKind::Contract, "upstream gradient not aligned with the taped graph's edges");
    }
    if (num_edges == 0) return;
    if (tape.steps.size() != static_cast<std::size_t>(params.config.steps) || tape.init.acts.empty()) {
        throw Error(ErrorKind::Contract, "backward called without a matching forward pass");
    }
    const Topology& topo = tape.topology;
    const Eigen::Index dv = params.config.node_dim;
    const Eigen::Index de = params.config.edge_dim;

    Mat d_logits(num_edges, 1);
    for (Eigen::Index e = 0; e < num_edges; ++e) d_logits(e, 0) = logit_grads[static_cast<std::size_t>(e)];
    Mat d_edges = params.classifier.backward(tape.classifier, d_logits, grads.classifier);
    Mat d_nodes = Mat::Zero(topo.num_nodes, dv);
    Mat d_initial = Mat::Zero(num_edges, de);

    for (std::size_t s = tape.steps.size(); s-- > 0;) {
        const StepCache& c = tape.steps[s];
        const Mat d_agg = params.node_update.backward(c.node, d_nodes, grads.node_update);
        Mat d_past(num_edges, dv), d_future(num_edges, dv);
        for (Eigen::Index e = 0; e < num_edges; ++e) {
            d_past.row(e) = d_agg.row(topo.dst[static_cast<std::size_t>(e)]).segment(0, dv);
            d_future.row(e) = d_agg.row(topo.src[static_cast<std::size_t>(e)]).segment(dv, dv);
        }
        const Mat d_past_in = params.past_message.backward(c.past, d_past, grads.past_message);
        const Mat d_future_in = params.future_message.backward(c.future, d_future, grads.future_message);

        Mat d_prev_nodes = Mat::Zero(topo.num_nodes, dv);
        scatter_message_grad(d_past_in, topo.src, topo.dst, d_prev_nodes, &d_edges, d_initial);
        scatter_message_grad(d_future_in, topo.dst, topo.src, d_prev_nodes, &d_edges, d_initial);

        const Mat d_edge_in = params.edge_update.backward(c.edge, d_edges, grads.edge_update);
        Mat d_prev_edges = Mat::Zero(num_edges, de);
        scatter_message_grad(d_edge_in, topo.src, topo.dst, d_prev_nodes, &d_prev_edges, d_initial);

        d_nodes = std::move(d_prev_nodes);
        d_edges = std::move(d_prev_edges);
    }
    // Step 1 read h^(0) as its previous edge state; the initial node state is constant.
    d_initial += d_edges;
    grads.level_embeddings[static_cast<std::size_t>(tape.level)] += d_initial.colwise().sum();
    params.edge_init.backward(tape.init, d_initial, grads.edge_init);
}

ModelParams backward(const ForwardTape& tape, const ModelParams& params, std::span<const double> score_grads) {
    if (score_grads.size() != static_cast<std::size_t>(tape.scores.size())) {
        throw Error(ErrorKind::Contract, "upstream gradient not aligned with the taped graph's edges");
    }
    std::vector<double> logit_grads(score_grads.size());
    for (std::size_t e = 0; e < score_grads.size(); ++e) {
        const double p = tape.scores[static_cast<Eigen::Index>(e)];
        logit_grads[e] = score_grads[e] * p * (1.0 - p);
    }
    ModelParams grads = ModelParams::zeros(params.config);
    backward_from_logits(tape, params, logit_grads, grads);
    return grads;
}

EdgeScorer network_scorer(const ModelParams& params) {
    auto shared = std::make_shared<const ModelParams>(params);
    return [shared](const AssociationGraph& graph) {
        const Eigen::VectorXd s = forward(graph, *shared);
        return std::vector<double>(s.data(), s.data() + s.size());
    };
}

EdgeScorer constant_scorer(double score) {
    return [score](const AssociationGraph& graph) { return std::vector<double>(graph.num_edges(), score); };
}

}  // namespace hiertrack
