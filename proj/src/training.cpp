#include "hiertrack/training.hpp"

#include "hiertrack/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace hiertrack {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (!(learning_rate > 0.0)) fail("train.learning_rate must be positive");
    if (!(weight_decay >= 0.0)) fail("train.weight_decay must be non-negative");
    if (batch_clips < 1) fail("train.batch_clips must be >= 1");
    if (epochs < 1) fail("train.epochs must be >= 1");
    if (!(focal_gamma >= 0.0)) fail("train.focal_gamma must be non-negative");
    if (unfreeze_interval < 1) fail("train.unfreeze_interval must be >= 1");
}

double focal_loss(double p, int y, double gamma) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidInput, "focal loss needs a probability in (0, 1)");
    return y ? -std::pow(1.0 - p, gamma) * std::log(p) : -std::pow(p, gamma) * std::log1p(-p);
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

double focal_loss_from_logit(double logit, int y, double gamma) {
    // Label 0 is label 1 with the logit negated.
    const double z = y ? logit : -logit;
    return std::pow(sigmoid(-z), gamma) * softplus(-z);
}

double focal_grad_logit(double logit, int y, double gamma) {
    const double z = y ? logit : -logit;
    const double q = sigmoid(-z);
    const double g = -std::pow(q, gamma) * (gamma * sigmoid(z) * softplus(-z) + q);
    return y ? g : -g;
}

double clip_loss(std::span<const LevelScores> levels, std::span<const int> active_levels, double gamma) {
    double total = 0.0;
    for (int l : active_levels) {
        const auto& lvl = levels[static_cast<std::size_t>(l)];
        if (lvl.scores.empty()) continue;
        double sum = 0.0;
        for (std::size_t e = 0; e < lvl.scores.size(); ++e) sum += focal_loss(lvl.scores[e], lvl.labels[e], gamma);
        total += sum / static_cast<double>(lvl.scores.size());
    }
    return total;
}

std::vector<int> unfreeze_schedule(std::uint64_t iteration, int interval, int num_levels) {
    const auto unlocked = std::min<std::uint64_t>(static_cast<std::uint64_t>(num_levels),
                                                  1 + iteration / static_cast<std::uint64_t>(interval));
    std::vector<int> active(unlocked);
    std::iota(active.begin(), active.end(), 0);
    return active;
}

ClipGradient clip_gradient(const TrainingClip& clip, const ModelParams& params, const HierarchyConfig& hierarchy,
                           std::span<const int> active_levels, double gamma) {
    if (std::none_of(clip.detections.begin(), clip.detections.end(),
                     [](const Detection& d) { return d.gt_identity.has_value(); })) {
        throw Error(ErrorKind::InvalidInput, "training clip has no ground-truth identities");
    }
    const auto num_levels = static_cast<std::size_t>(hierarchy.num_levels());
    std::vector<char> active(num_levels, 0);
    for (int l : active_levels) active[static_cast<std::size_t>(l)] = 1;

    std::vector<ModelParams> level_grads;
    level_grads.reserve(num_levels);
    for (std::size_t l = 0; l < num_levels; ++l) {
        level_grads.push_back(active[l] ? ModelParams::zeros(params.config) : ModelParams{});
    }
    std::vector<double> loss_sum(num_levels, 0.0);
    std::vector<std::size_t> edge_count(num_levels, 0);

    EdgeScorer scorer = [&](const AssociationGraph& graph) {
        const auto l = static_cast<std::size_t>(graph.level);
        if (!active[l]) {
            const Eigen::VectorXd s = forward(graph, params);
            return std::vector<double>(s.begin(), s.end());
        }
        ForwardTape tape;
        const Eigen::VectorXd s = forward(graph, params, &tape);
        const auto labels = assign_edge_labels(graph);
        std::vector<double> dlogit(labels.size());
        for (std::size_t e = 0; e < labels.size(); ++e) {
            const double z = tape.logits[static_cast<Eigen::Index>(e)];
            loss_sum[l] += focal_loss_from_logit(z, labels[e], gamma);
            dlogit[e] = focal_grad_logit(z, labels[e], gamma);
        }
        edge_count[l] += labels.size();
        backward_from_logits(tape, params, dlogit, level_grads[l]);
        return std::vector<double>(s.begin(), s.end());
    };
    // Levels above the last active one cannot influence the loss.
    HierarchyConfig truncated = hierarchy;
    std::size_t last = 0;
    for (std::size_t l = 0; l < num_levels; ++l) {
        if (active[l]) last = l;
    }
    truncated.level_window_sizes.resize(last + 1);
    run_hierarchy(clip.detections, *clip.embeddings, clip.window, truncated, scorer);

    ClipGradient out{ModelParams::zeros(params.config), std::vector<double>(num_levels, 0.0), edge_count, 0.0};
    for (std::size_t l = 0; l < num_levels; ++l) {
        if (!active[l] || edge_count[l] == 0) continue;
        const double inv = 1.0 / static_cast<double>(edge_count[l]);
        out.grads.add_scaled(level_grads[l], inv);
        out.level_loss[l] = loss_sum[l] * inv;
        out.loss += out.level_loss[l];
    }
    return out;
}

std::string StepReport::to_log_line() const {
    std::string line = "iter=" + std::to_string(iteration) + " active=";
    for (std::size_t i = 0; i < active_levels.size(); ++i) {
        if (i) line += ',';
        line += std::to_string(active_levels[i] + 1);
    }
    for (std::size_t l = 0; l < level_loss.size(); ++l) {
        line += " loss_l" + std::to_string(l + 1) + "=" + text::format_double(level_loss[l]);
    }
    line += " total=" + text::format_double(total_loss);
    return line;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::clamp<long long>(threads, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

void adam_update(ModelParams& params, const ModelParams& grads, OptimizerState& opt, const TrainConfig& train) {
    const std::size_t n = params.parameter_count();
    if (opt.first_moment.size() != n) {
        opt.first_moment.assign(n, 0.0);
        opt.second_moment.assign(n, 0.0);
        opt.step = 0;
    }
    ++opt.step;
    std::vector<double> p = params.flatten();
    const std::vector<double> g = grads.flatten();
    const double bc1 = 1.0 - std::pow(train.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(train.beta2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < n; ++i) {
        opt.first_moment[i] = train.beta1 * opt.first_moment[i] + (1.0 - train.beta1) * g[i];
        opt.second_moment[i] = train.beta2 * opt.second_moment[i] + (1.0 - train.beta2) * g[i] * g[i];
        const double m_hat = opt.first_moment[i] / bc1;
        const double v_hat = opt.second_moment[i] / bc2;
        p[i] -= train.learning_rate * (m_hat / (std::sqrt(v_hat) + train.epsilon) + train.weight_decay * p[i]);
    }
    params.assign(p);
}

StepReport train_step(std::span<const TrainingClip* const> batch, ModelParams& params, OptimizerState& optimizer,
                      std::uint64_t iteration, const TrainConfig& train, const HierarchyConfig& hierarchy,
                      int threads) {
    if (batch.empty()) throw Error(ErrorKind::InvalidInput, "training batch is empty");
    StepReport report;
    report.iteration = iteration;
    report.active_levels = unfreeze_schedule(iteration, train.unfreeze_interval, hierarchy.num_levels());

    std::vector<ClipGradient> per_clip(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        per_clip[i] = clip_gradient(*batch[i], params, hierarchy, report.active_levels, train.focal_gamma);
    });

    // Fixed reduction order keeps results independent of the thread count.
    ModelParams total = ModelParams::zeros(params.config);
    report.level_loss.assign(static_cast<std::size_t>(hierarchy.num_levels()), 0.0);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const auto& c : per_clip) {
        total.add_scaled(c.grads, inv);
        for (std::size_t l = 0; l < c.level_loss.size(); ++l) report.level_loss[l] += c.level_loss[l] * inv;
        report.total_loss += c.loss * inv;
    }
    adam_update(params, total, optimizer, train);
    return report;
}

std::uint64_t planned_iterations(std::size_t num_clips, const TrainConfig& train) {
    const auto per_epoch = (num_clips + static_cast<std::size_t>(train.batch_clips) - 1) /
                           static_cast<std::size_t>(train.batch_clips);
    std::uint64_t total = static_cast<std::uint64_t>(per_epoch) * static_cast<std::uint64_t>(train.epochs);
    if (train.max_iterations > 0) total = std::min(total, train.max_iterations);
    return total;
}

TrainingResult train(std::span<const TrainingClip> clips, ModelParams& params, OptimizerState& optimizer,
                     std::uint64_t start_iteration, const TrainConfig& cfg, const HierarchyConfig& hierarchy,
                     int threads, const std::function<void(const StepReport&)>& on_step) {
    cfg.validate();
    if (clips.empty()) throw Error(ErrorKind::InvalidInput, "no training clips");
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_clips);
    const std::size_t per_epoch = (clips.size() + batch - 1) / batch;
    const std::uint64_t total = planned_iterations(clips.size(), cfg);

    TrainingResult result;
    std::vector<std::size_t> order(clips.size());
    std::uint64_t shuffled_epoch = UINT64_MAX;
    for (std::uint64_t it = start_iteration; it < total; ++it) {
        const std::uint64_t epoch = it / per_epoch;
        if (epoch != shuffled_epoch) {
            // The epoch's permutation depends only on (seed, epoch), so resuming reproduces it.
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + epoch);
            std::shuffle(order.begin(), order.end(), rng);
            shuffled_epoch = epoch;
        }
        const std::size_t first = static_cast<std::size_t>(it % per_epoch) * batch;
        std::vector<const TrainingClip*> members;
        for (std::size_t k = first; k < std::min(first + batch, clips.size()); ++k) members.push_back(&clips[order[k]]);
        StepReport report = train_step(members, params, optimizer, it, cfg, hierarchy, threads);
        if (on_step) on_step(report);
        result.reports.push_back(std::move(report));
        result.iteration = it + 1;
    }
    if (result.reports.empty()) result.iteration = start_iteration;
    return result;
}

std::vector<TrainingClip> make_clips(std::span<const Detection> detections,
                                     std::shared_ptr<const EmbeddingTable> embeddings, int clip_length) {
    std::vector<TrainingClip> clips;
    if (detections.empty()) return clips;
    int last = 0;
    for (const auto& d : detections) last = std::max(last, d.frame);
    for (int start = 0; start <= last; start += clip_length) {
        TrainingClip clip;
        clip.window = {start, start + clip_length};
        clip.embeddings = embeddings;
        for (const auto& d : detections) {
            if (clip.window.contains(d.frame)) clip.detections.push_back(d);
        }
        if (!clip.detections.empty()) clips.push_back(std::move(clip));
    }
    return clips;
}

}  // namespace hiertrack
