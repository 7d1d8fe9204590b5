#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/hierarchy.hpp"

#include <optional>
#include <random>
#include <vector>

namespace hiertrack::test {

/// Accumulates detections and their embedding rows so that embedding_id stays the row index.
class SceneBuilder {
public:
    explicit SceneBuilder(std::size_t dim = 2) : table_(dim, {}), dim_(dim) {}

    Detection add(int frame, Box box, std::vector<float> embedding = {}, std::optional<int> identity = {},
                  int class_id = 0) {
        if (embedding.empty()) embedding.assign(dim_, 0.0f);
        Detection d;
        d.frame = frame;
        d.box = box;
        d.class_id = class_id;
        d.embedding_id = table_.rows();
        d.gt_identity = identity;
        table_.append(embedding);
        dets_.push_back(d);
        return d;
    }

    const EmbeddingTable& table() const { return table_; }
    const std::vector<Detection>& detections() const { return dets_; }

private:
    EmbeddingTable table_;
    std::size_t dim_;
    std::vector<Detection> dets_;
};

inline Tracklet single(SceneBuilder& b, int frame, Box box, std::vector<float> emb = {}, std::optional<int> id = {}) {
    return make_tracklet({b.add(frame, box, std::move(emb), id)}, b.table());
}

/// Random tracklets over [0, frames): each identity gets a run of nearby boxes, split into `pieces` tracklets.
inline std::vector<Tracklet> random_tracklets(SceneBuilder& b, std::mt19937_64& rng, int identities, int frames,
                                              int pieces) {
    std::uniform_real_distribution<double> pos(0.0, 200.0), step(-3.0, 3.0), unit(0.0, 1.0);
    std::vector<Tracklet> out;
    for (int id = 0; id < identities; ++id) {
        double x = pos(rng), y = pos(rng);
        std::vector<float> base{static_cast<float>(unit(rng)), static_cast<float>(unit(rng))};
        std::vector<Detection> run;
        for (int f = 0; f < frames; ++f) {
            x += step(rng);
            y += step(rng);
            if (unit(rng) < 0.15) continue;
            run.push_back(b.add(f, {x, y, 10.0, 20.0}, base, id));
        }
        if (run.empty()) continue;
        const std::size_t chunk = std::max<std::size_t>(1, (run.size() + pieces - 1) / pieces);
        for (std::size_t s = 0; s < run.size(); s += chunk) {
            std::vector<Detection> part(run.begin() + static_cast<long>(s),
                                        run.begin() + static_cast<long>(std::min(run.size(), s + chunk)));
            out.push_back(make_tracklet(part, b.table()));
        }
    }
    sort_tracklets(out);
    return out;
}

}  // namespace hiertrack::test
