#include "hiertrack/stitching.hpp"

#include "hiertrack/assignment.hpp"
#include "hiertrack/training.hpp"

#include <algorithm>
#include <iterator>
#include <map>
#include <mutex>
#include <unordered_map>

namespace hiertrack {

WindowPlan WindowPlan::make(int sequence_end, int window_length, int stride) {
    if (window_length < 1 || stride < 1 || stride > window_length) {
        throw Error(ErrorKind::InvalidConfig, "window plan needs 1 <= stride <= window length");
    }
    WindowPlan plan{window_length, stride, {}};
    for (int start = 0;; start += stride) {
        if (start + window_length >= sequence_end) {
            const int tail = std::max(0, sequence_end - window_length);
            if (plan.windows.empty() || tail > plan.windows.back().start) {
                plan.windows.push_back({tail, tail + window_length});
            }
            break;
        }
        plan.windows.push_back({start, start + window_length});
    }
    return plan;
}

double track_overlap_iou(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    std::vector<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<std::size_t> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    const std::size_t uni = sa.size() + sb.size() - common.size();
    return uni == 0 ? 0.0 : static_cast<double>(common.size()) / static_cast<double>(uni);
}

std::vector<int> stitch_pair(const std::vector<std::vector<std::size_t>>& tracks_a,
                             const std::vector<std::vector<std::size_t>>& tracks_b) {
    std::unordered_map<std::size_t, int> owner_a;
    for (std::size_t i = 0; i < tracks_a.size(); ++i) {
        for (std::size_t key : tracks_a[i]) owner_a[key] = static_cast<int>(i);
    }
    std::vector<WeightedPair> pairs;
    for (std::size_t j = 0; j < tracks_b.size(); ++j) {
        std::vector<int> partners;
        for (std::size_t key : tracks_b[j]) {
            if (auto it = owner_a.find(key); it != owner_a.end()) partners.push_back(it->second);
        }
        std::sort(partners.begin(), partners.end());
        partners.erase(std::unique(partners.begin(), partners.end()), partners.end());
        for (int i : partners) {
            pairs.push_back({i, static_cast<int>(j),
                             1.0 - track_overlap_iou(tracks_a[static_cast<std::size_t>(i)], tracks_b[j])});
        }
    }
    std::vector<int> match(tracks_b.size(), -1);
    for (std::size_t k : min_cost_max_cardinality_matching(static_cast<int>(tracks_a.size()),
                                                           static_cast<int>(tracks_b.size()), pairs)) {
        match[static_cast<std::size_t>(pairs[k].right)] = pairs[k].left;
    }
    return match;
}

Trajectory interpolate_gaps(const Trajectory& trajectory) {
    Trajectory out;
    out.identity = trajectory.identity;
    const auto& dets = trajectory.detections;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const bool was_interpolated = i < trajectory.interpolated.size() && trajectory.interpolated[i];
        if (i > 0) {
            const Detection& a = dets[i - 1];
            const Detection& b = dets[i];
            const int gap = b.frame - a.frame;
            for (int f = a.frame + 1; f < b.frame; ++f) {
                const double t = static_cast<double>(f - a.frame) / gap;
                auto lerp = [t](double p, double q) { return p + t * (q - p); };
                Detection d = a;
                d.frame = f;
                d.box = {lerp(a.box.x, b.box.x), lerp(a.box.y, b.box.y), lerp(a.box.w, b.box.w), lerp(a.box.h, b.box.h)};
                d.confidence = lerp(a.confidence, b.confidence);
                out.detections.push_back(d);
                out.interpolated.push_back(true);
            }
        }
        out.detections.push_back(dets[i]);
        out.interpolated.push_back(was_interpolated);
    }
    return out;
}

std::vector<Trajectory> track_sequence(std::span<const Detection> detections, const EmbeddingTable& embeddings,
                                       const HierarchyConfig& config, const WindowPlan& plan,
                                       const EdgeScorer& scorer, const GraphObserver& observer, int threads,
                                       bool interpolate) {
    if (detections.empty()) return {};
    const auto& windows = plan.windows;

    // Observers are user callbacks; serialize them when windows run concurrently.
    std::mutex observer_mutex;
    GraphObserver guarded;
    if (observer) {
        guarded = [&](const AssociationGraph& g, std::span<const int> d) {
            std::lock_guard lock(observer_mutex);
            observer(g, d);
        };
    }
    std::vector<std::vector<Tracklet>> per_window(windows.size());
    parallel_for(windows.size(), threads, [&](std::size_t w) {
        std::vector<Detection> inside;
        for (const auto& d : detections) {
            if (windows[w].contains(d.frame)) inside.push_back(d);
        }
        per_window[w] = run_hierarchy(inside, embeddings, windows[w], config, scorer, guarded);
    });

    std::map<std::size_t, int> identity_of;  // detection key -> stitched identity
    std::map<std::size_t, const Detection*> by_key;
    for (const auto& d : detections) by_key[d.embedding_id] = &d;
    int next_identity = 0;
    std::vector<int> previous_ids;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto& tracks = per_window[w];
        std::vector<int> ids(tracks.size(), -1);
        int owned_until = windows[w].start;  // frames before this are already assigned
        if (w > 0) {
            const Window overlap{windows[w].start, windows[w - 1].end};
            owned_until = overlap.end;
            auto restrict = [&](const std::vector<Tracklet>& ts) {
                std::vector<std::vector<std::size_t>> keys(ts.size());
                for (std::size_t i = 0; i < ts.size(); ++i) {
                    for (const auto& d : ts[i].detections()) {
                        if (overlap.contains(d.frame)) keys[i].push_back(d.embedding_id);
                    }
                }
                return keys;
            };
            const auto match = stitch_pair(restrict(per_window[w - 1]), restrict(tracks));
            for (std::size_t j = 0; j < tracks.size(); ++j) {
                if (match[j] >= 0) ids[j] = previous_ids[static_cast<std::size_t>(match[j])];
            }
        }
        for (std::size_t j = 0; j < tracks.size(); ++j) {
            if (ids[j] < 0) ids[j] = next_identity++;
            for (const auto& d : tracks[j].detections()) {
                if (d.frame >= owned_until || w == 0) identity_of.emplace(d.embedding_id, ids[j]);
            }
        }
        previous_ids = std::move(ids);
    }

    std::map<int, std::vector<Detection>> grouped;
    for (const auto& [key, id] : identity_of) grouped[id].push_back(*by_key.at(key));
    std::vector<Trajectory> out;
    for (auto& [id, dets] : grouped) {
        std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
        Trajectory t;
        t.detections = std::move(dets);
        t.interpolated.assign(t.detections.size(), false);
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(), [](const Trajectory& a, const Trajectory& b) {
        const auto& da = a.detections.front();
        const auto& db = b.detections.front();
        if (da.frame != db.frame) return da.frame < db.frame;
        return da.embedding_id < db.embedding_id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].identity = static_cast<int>(i) + 1;
        if (interpolate) out[i] = interpolate_gaps(out[i]);
    }
    return out;
}

}  // namespace hiertrack
