#include "hiertrack/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace hiertrack {

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    auto rate = [&](double r, const char* name) {
        if (!(r >= 0.0 && r <= 1.0)) fail(std::string("scenario.") + name + " must lie in [0, 1]");
    };
    if (num_objects < 1) fail("scenario.num_objects must be >= 1");
    if (num_frames < 1) fail("scenario.num_frames must be >= 1");
    if (!(frame_width > 0.0 && frame_height > 0.0)) fail("scenario frame size must be positive");
    if (!(speed_min >= 0.0 && speed_max >= speed_min)) fail("scenario speed range is invalid");
    if (!(box_width_min > 0.0 && box_width_max >= box_width_min)) fail("scenario box width range is invalid");
    if (!(aspect_ratio > 0.0)) fail("scenario.aspect_ratio must be positive");
    if (box_width_max >= frame_width || box_width_max * aspect_ratio >= frame_height) {
        fail("scenario boxes do not fit inside the frame");
    }
    rate(direction_change_prob, "direction_change_prob");
    rate(gap_prob, "gap_prob");
    rate(dropout, "dropout");
    if (max_gap < 0 || max_gap > num_frames) fail("scenario.max_gap must lie in [0, num_frames]");
    if (!(jitter_std >= 0.0) || !(appearance_noise >= 0.0)) fail("scenario noise levels must be non-negative");
    if (embedding_dim < 1) fail("scenario.embedding_dim must be >= 1");
    if (!(box_quantum >= 0.0)) fail("scenario.box_quantum must be non-negative");
}

namespace {

struct ObjectState {
    double cx, cy, w, h, vx, vy;
    int occluded_until = -1;
    std::vector<float> base;
};

}  // namespace

Scenario generate(const ScenarioConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto dim = static_cast<std::size_t>(config.embedding_dim);

    auto random_base = [&] {
        std::vector<float> v(dim);
        double sq = 0.0;
        std::vector<double> raw(dim);
        for (auto& x : raw) {
            x = normal(rng);
            sq += x * x;
        }
        const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
        for (std::size_t i = 0; i < dim; ++i) v[i] = static_cast<float>(raw[i] * inv);
        return v;
    };
    auto heading = [&](ObjectState& o) {
        const double speed = config.speed_min + (config.speed_max - config.speed_min) * unit(rng);
        const double angle = 2.0 * std::numbers::pi * unit(rng);
        o.vx = speed * std::cos(angle);
        o.vy = speed * std::sin(angle);
    };

    const std::vector<float> shared_base = random_base();
    std::vector<ObjectState> objects(static_cast<std::size_t>(config.num_objects));
    for (auto& o : objects) {
        o.w = config.box_width_min + (config.box_width_max - config.box_width_min) * unit(rng);
        o.h = o.w * config.aspect_ratio;
        o.cx = 0.5 * o.w + (config.frame_width - o.w) * unit(rng);
        o.cy = 0.5 * o.h + (config.frame_height - o.h) * unit(rng);
        heading(o);
        o.base = config.uniform_appearance ? shared_base : random_base();
    }

    auto quantize = [&](double v) {
        return config.box_quantum > 0.0 ? std::round(v / config.box_quantum) * config.box_quantum : v;
    };

    Scenario out;
    std::vector<float> emb(dim);
    for (int frame = 0; frame < config.num_frames; ++frame) {
        for (std::size_t id = 0; id < objects.size(); ++id) {
            auto& o = objects[id];
            if (frame > 0) {
                if (unit(rng) < config.direction_change_prob) heading(o);
                o.cx += o.vx;
                o.cy += o.vy;
                // Reflect at the borders.
                if (o.cx < 0.5 * o.w) { o.cx = o.w - o.cx; o.vx = std::abs(o.vx); }
                if (o.cx > config.frame_width - 0.5 * o.w) { o.cx = 2.0 * (config.frame_width - 0.5 * o.w) - o.cx; o.vx = -std::abs(o.vx); }
                if (o.cy < 0.5 * o.h) { o.cy = o.h - o.cy; o.vy = std::abs(o.vy); }
                if (o.cy > config.frame_height - 0.5 * o.h) { o.cy = 2.0 * (config.frame_height - 0.5 * o.h) - o.cy; o.vy = -std::abs(o.vy); }
            }
            // Draws happen in a fixed order regardless of visibility to keep streams aligned.
            const double gap_draw = unit(rng);
            const double gap_len_draw = unit(rng);
            const double drop_draw = unit(rng);
            if (o.occluded_until < frame && config.max_gap > 0 && gap_draw < config.gap_prob) {
                o.occluded_until = frame + static_cast<int>(gap_len_draw * config.max_gap);
            }
            const bool visible = o.occluded_until < frame && !(drop_draw < config.dropout);
            const double jx = config.jitter_std * normal(rng);
            const double jy = config.jitter_std * normal(rng);
            const double jw = 0.25 * config.jitter_std * normal(rng);
            const double jh = 0.25 * config.jitter_std * normal(rng);
            for (std::size_t c = 0; c < dim; ++c) {
                emb[c] = static_cast<float>(o.base[c] + config.appearance_noise * normal(rng));
            }
            if (!visible) continue;

            Detection d;
            d.frame = frame;
            const double w = std::max(1.0, o.w + jw);
            const double h = std::max(1.0, o.h + jh);
            d.box = {quantize(o.cx + jx - 0.5 * w), quantize(o.cy + jy - 0.5 * h), quantize(w), quantize(h)};
            d.confidence = 1.0;
            d.class_id = 0;
            d.embedding_id = out.detections.size();
            d.gt_identity = static_cast<int>(id) + 1;
            out.detections.push_back(d);
            out.embeddings.append(emb);
        }
    }
    if (out.embeddings.dim() == 0) out.embeddings = EmbeddingTable(dim, {});
    return out;
}

}  // namespace hiertrack
