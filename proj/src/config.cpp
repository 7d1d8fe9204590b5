#include "hiertrack/config.hpp"

#include "hiertrack/text.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hiertrack {

namespace {

struct Field {
    std::function<void(RunConfig&, std::string_view, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field int_field(T RunConfig::*section, int T::*member) {
    return {[=](RunConfig& c, std::string_view v, const std::string& key) { c.*section.*member = text::parse_int(v, key); },
            [=](const RunConfig& c) { return std::to_string(c.*section.*member); }};
}

template <typename T>
Field u64_field(T RunConfig::*section, std::uint64_t T::*member) {
    return {[=](RunConfig& c, std::string_view v, const std::string& key) {
                const long long x = text::parse_int64(v, key);
                if (x < 0) throw Error(ErrorKind::InvalidConfig, key + " must be non-negative");
                c.*section.*member = static_cast<std::uint64_t>(x);
            },
            [=](const RunConfig& c) { return std::to_string(c.*section.*member); }};
}

template <typename T>
Field double_field(T RunConfig::*section, double T::*member) {
    return {[=](RunConfig& c, std::string_view v, const std::string& key) {
                c.*section.*member = text::parse_double(v, key);
            },
            [=](const RunConfig& c) { return text::format_double(c.*section.*member); }};
}

template <typename T>
Field bool_field(T RunConfig::*section, bool T::*member) {
    return {[=](RunConfig& c, std::string_view v, const std::string& key) { c.*section.*member = text::parse_bool(v, key); },
            [=](const RunConfig& c) { return std::string(c.*section.*member ? "true" : "false"); }};
}

template <typename T>
Field list_field(T RunConfig::*section, std::vector<int> T::*member) {
    return {[=](RunConfig& c, std::string_view v, const std::string& key) {
                c.*section.*member = text::parse_int_list(v, key);
            },
            [=](const RunConfig& c) { return text::format_int_list(c.*section.*member); }};
}

Field top_int(int RunConfig::*member) {
    return {[=](RunConfig& c, std::string_view v, const std::string& key) { c.*member = text::parse_int(v, key); },
            [=](const RunConfig& c) { return std::to_string(c.*member); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
    using H = HierarchyConfig;
    using M = ModelConfig;
    using T = TrainConfig;
    using S = ScenarioConfig;
    using E = EvalOptions;
    static const std::vector<std::pair<std::string, Field>> table{
        {"hierarchy.levels", list_field(&RunConfig::hierarchy, &H::level_window_sizes)},
        {"hierarchy.knn_k", int_field(&RunConfig::hierarchy, &H::knn_k)},
        {"hierarchy.lambda", double_field(&RunConfig::hierarchy, &H::lambda_mix)},
        {"hierarchy.steps", int_field(&RunConfig::hierarchy, &H::message_passing_steps)},
        {"hierarchy.node_dim", int_field(&RunConfig::hierarchy, &H::node_dim)},
        {"hierarchy.edge_dim", int_field(&RunConfig::hierarchy, &H::edge_dim)},
        {"hierarchy.embedding_dim", int_field(&RunConfig::hierarchy, &H::embedding_dim)},
        {"model.edge_init_hidden", list_field(&RunConfig::model, &M::edge_init_hidden)},
        {"model.edge_hidden", list_field(&RunConfig::model, &M::edge_hidden)},
        {"model.message_hidden", list_field(&RunConfig::model, &M::message_hidden)},
        {"model.node_hidden", list_field(&RunConfig::model, &M::node_hidden)},
        {"model.class_hidden", list_field(&RunConfig::model, &M::class_hidden)},
        {"model.normalize_time", bool_field(&RunConfig::model, &M::normalize_time)},
        {"train.learning_rate", double_field(&RunConfig::train, &T::learning_rate)},
        {"train.weight_decay", double_field(&RunConfig::train, &T::weight_decay)},
        {"train.batch_clips", int_field(&RunConfig::train, &T::batch_clips)},
        {"train.epochs", int_field(&RunConfig::train, &T::epochs)},
        {"train.focal_gamma", double_field(&RunConfig::train, &T::focal_gamma)},
        {"train.unfreeze_interval", int_field(&RunConfig::train, &T::unfreeze_interval)},
        {"train.seed", u64_field(&RunConfig::train, &T::seed)},
        {"train.max_iterations", u64_field(&RunConfig::train, &T::max_iterations)},
        {"train.beta1", double_field(&RunConfig::train, &T::beta1)},
        {"train.beta2", double_field(&RunConfig::train, &T::beta2)},
        {"train.epsilon", double_field(&RunConfig::train, &T::epsilon)},
        {"window.length", top_int(&RunConfig::window_length)},
        {"window.stride", top_int(&RunConfig::window_stride)},
        {"eval.iou_threshold", double_field(&RunConfig::eval, &E::iou_threshold)},
        {"eval.include_interpolated", bool_field(&RunConfig::eval, &E::include_interpolated)},
        {"scenario.sequences", top_int(&RunConfig::num_sequences)},
        {"scenario.num_objects", int_field(&RunConfig::scenario, &S::num_objects)},
        {"scenario.num_frames", int_field(&RunConfig::scenario, &S::num_frames)},
        {"scenario.frame_width", double_field(&RunConfig::scenario, &S::frame_width)},
        {"scenario.frame_height", double_field(&RunConfig::scenario, &S::frame_height)},
        {"scenario.speed_min", double_field(&RunConfig::scenario, &S::speed_min)},
        {"scenario.speed_max", double_field(&RunConfig::scenario, &S::speed_max)},
        {"scenario.direction_change_prob", double_field(&RunConfig::scenario, &S::direction_change_prob)},
        {"scenario.box_width_min", double_field(&RunConfig::scenario, &S::box_width_min)},
        {"scenario.box_width_max", double_field(&RunConfig::scenario, &S::box_width_max)},
        {"scenario.aspect_ratio", double_field(&RunConfig::scenario, &S::aspect_ratio)},
        {"scenario.gap_prob", double_field(&RunConfig::scenario, &S::gap_prob)},
        {"scenario.max_gap", int_field(&RunConfig::scenario, &S::max_gap)},
        {"scenario.dropout", double_field(&RunConfig::scenario, &S::dropout)},
        {"scenario.jitter_std", double_field(&RunConfig::scenario, &S::jitter_std)},
        {"scenario.embedding_dim", int_field(&RunConfig::scenario, &S::embedding_dim)},
        {"scenario.appearance_noise", double_field(&RunConfig::scenario, &S::appearance_noise)},
        {"scenario.uniform_appearance", bool_field(&RunConfig::scenario, &S::uniform_appearance)},
        {"scenario.box_quantum", double_field(&RunConfig::scenario, &S::box_quantum)},
        {"scenario.seed", u64_field(&RunConfig::scenario, &S::seed)},
    };
    return table;
}

}  // namespace

ModelConfig RunConfig::model_config() const {
    ModelConfig m = model;
    m.node_dim = hierarchy.node_dim;
    m.edge_dim = hierarchy.edge_dim;
    m.steps = hierarchy.message_passing_steps;
    m.level_window_sizes = hierarchy.level_window_sizes;
    return m;
}

WindowPlan RunConfig::window_plan(int sequence_end) const {
    return WindowPlan::make(sequence_end, window_length, window_stride);
}

void RunConfig::validate() const {
    hierarchy.validate();
    model_config().validate();
    train.validate();
    scenario.validate();
    if (window_length < 1 || window_stride < 1 || window_stride > window_length) {
        throw Error(ErrorKind::InvalidConfig, "window.stride must lie in [1, window.length]");
    }
    if (window_length < hierarchy.clip_length()) {
        throw Error(ErrorKind::InvalidConfig, "window.length must cover the top hierarchy level");
    }
    if (!(eval.iou_threshold > 0.0 && eval.iou_threshold <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "eval.iou_threshold must lie in (0, 1]");
    }
    if (num_sequences < 1) throw Error(ErrorKind::InvalidConfig, "scenario.sequences must be >= 1");
    if (scenario.embedding_dim != hierarchy.embedding_dim) {
        throw Error(ErrorKind::InvalidConfig, "scenario.embedding_dim must equal hierarchy.embedding_dim");
    }
}

void RunConfig::set(std::string_view key, std::string_view value) {
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            try {
                field.set(*this, value, name);
            } catch (const Error& e) {
                // Malformed values are configuration errors, not input-data errors.
                if (e.kind() != ErrorKind::InvalidInput) throw;
                throw Error(ErrorKind::InvalidConfig, e.what());
            }
            return;
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& [name, field] : fields()) out += name + "=" + field.get(*this) + "\n";
    return out;
}

RunConfig RunConfig::parse(std::string_view content, std::string_view source) {
    RunConfig c;
    for (const auto& [key, value] : text::parse_key_values(content, source)) c.set(key, value);
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, "override '" + o + "' needs key=value");
        config.set(text::trim(std::string_view(o).substr(0, eq)), text::trim(std::string_view(o).substr(eq + 1)));
    }
}

}  // namespace hiertrack
