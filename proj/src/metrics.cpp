#include "hiertrack/metrics.hpp"

#include "hiertrack/assignment.hpp"
#include "hiertrack/features.hpp"
#include "hiertrack/text.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace hiertrack {

std::vector<TrackRow> to_rows(std::span<const Trajectory> trajectories) {
    std::vector<TrackRow> rows;
    for (const auto& t : trajectories) {
        for (std::size_t i = 0; i < t.detections.size(); ++i) {
            const auto& d = t.detections[i];
            rows.push_back({d.frame, t.identity, d.box, d.confidence, d.class_id,
                            i < t.interpolated.size() && t.interpolated[i]});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const TrackRow& a, const TrackRow& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.identity < b.identity;
    });
    return rows;
}

std::vector<TrackRow> gt_rows(std::span<const Detection> detections) {
    std::vector<TrackRow> rows;
    for (const auto& d : detections) {
        if (d.gt_identity) rows.push_back({d.frame, *d.gt_identity, d.box, d.confidence, d.class_id, false});
    }
    return rows;
}

namespace {

struct Correspondence {
    int frame;
    int gt_id;
    int pred_id;
};

// Per frame: identical boxes first, then maximum-IoU assignment among pairs above the threshold.
std::vector<Correspondence> correspond(std::span<const TrackRow> predicted, std::span<const TrackRow> gt,
                                       const EvalOptions& options, std::size_t& pred_count) {
    std::map<int, std::pair<std::vector<const TrackRow*>, std::vector<const TrackRow*>>> frames;
    pred_count = 0;
    for (const auto& r : predicted) {
        if (r.interpolated && !options.include_interpolated) continue;
        frames[r.frame].first.push_back(&r);
        ++pred_count;
    }
    for (const auto& r : gt) frames[r.frame].second.push_back(&r);

    std::vector<Correspondence> out;
    for (auto& [frame, sides] : frames) {
        auto& [preds, gts] = sides;
        std::vector<char> pred_used(preds.size(), 0), gt_used(gts.size(), 0);
        for (std::size_t g = 0; g < gts.size(); ++g) {
            for (std::size_t p = 0; p < preds.size(); ++p) {
                if (!pred_used[p] && preds[p]->box == gts[g]->box) {
                    pred_used[p] = gt_used[g] = 1;
                    out.push_back({frame, gts[g]->identity, preds[p]->identity});
                    break;
                }
            }
        }
        std::vector<int> rest_g, rest_p;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (!gt_used[g]) rest_g.push_back(static_cast<int>(g));
        }
        for (std::size_t p = 0; p < preds.size(); ++p) {
            if (!pred_used[p]) rest_p.push_back(static_cast<int>(p));
        }
        std::vector<WeightedPair> pairs;
        for (std::size_t a = 0; a < rest_g.size(); ++a) {
            for (std::size_t b = 0; b < rest_p.size(); ++b) {
                const double v = iou(gts[static_cast<std::size_t>(rest_g[a])]->box,
                                     preds[static_cast<std::size_t>(rest_p[b])]->box);
                if (v >= options.iou_threshold) pairs.push_back({static_cast<int>(a), static_cast<int>(b), v});
            }
        }
        for (std::size_t k : max_weight_matching(static_cast<int>(rest_g.size()), static_cast<int>(rest_p.size()), pairs)) {
            out.push_back({frame, gts[static_cast<std::size_t>(rest_g[static_cast<std::size_t>(pairs[k].left)])]->identity,
                           preds[static_cast<std::size_t>(rest_p[static_cast<std::size_t>(pairs[k].right)])]->identity});
        }
    }
    return out;
}

double f1(std::int64_t idtp, std::int64_t idfp, std::int64_t idfn) {
    const auto denom = 2 * idtp + idfp + idfn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(idtp) / static_cast<double>(denom);
}

std::int64_t count_switches(std::vector<Correspondence> matches) {
    std::sort(matches.begin(), matches.end(), [](const Correspondence& a, const Correspondence& b) {
        return a.gt_id != b.gt_id ? a.gt_id < b.gt_id : a.frame < b.frame;
    });
    std::int64_t switches = 0;
    for (std::size_t i = 1; i < matches.size(); ++i) {
        if (matches[i].gt_id == matches[i - 1].gt_id && matches[i].pred_id != matches[i - 1].pred_id) ++switches;
    }
    return switches;
}

}  // namespace

EvalReport idf1(std::span<const TrackRow> predicted, std::span<const TrackRow> gt, const EvalOptions& options) {
    if (gt.empty()) throw Error(ErrorKind::InvalidInput, "ground truth is empty");
    std::size_t pred_count = 0;
    const auto matches = correspond(predicted, gt, options, pred_count);

    std::map<int, int> gt_index, pred_index;
    for (const auto& m : matches) {
        gt_index.try_emplace(m.gt_id, static_cast<int>(gt_index.size()));
        pred_index.try_emplace(m.pred_id, static_cast<int>(pred_index.size()));
    }
    std::map<std::pair<int, int>, double> overlap;
    for (const auto& m : matches) overlap[{gt_index[m.gt_id], pred_index[m.pred_id]}] += 1.0;
    std::vector<WeightedPair> pairs;
    for (const auto& [key, count] : overlap) pairs.push_back({key.first, key.second, count});

    EvalReport r;
    for (std::size_t k : max_weight_matching(static_cast<int>(gt_index.size()), static_cast<int>(pred_index.size()), pairs)) {
        r.idtp += static_cast<std::int64_t>(pairs[k].weight);
    }
    r.idfn = static_cast<std::int64_t>(gt.size()) - r.idtp;
    r.idfp = static_cast<std::int64_t>(pred_count) - r.idtp;
    r.idf1 = f1(r.idtp, r.idfp, r.idfn);
    r.id_switches = count_switches(matches);
    return r;
}

std::int64_t id_switches(std::span<const TrackRow> predicted, std::span<const TrackRow> gt,
                         const EvalOptions& options) {
    if (gt.empty()) throw Error(ErrorKind::InvalidInput, "ground truth is empty");
    std::size_t pred_count = 0;
    return count_switches(correspond(predicted, gt, options, pred_count));
}

EvalReport combine(std::vector<SequenceReport> sequences) {
    EvalReport r;
    for (const auto& s : sequences) {
        r.idtp += s.idtp;
        r.idfp += s.idfp;
        r.idfn += s.idfn;
        r.id_switches += s.id_switches;
    }
    r.idf1 = f1(r.idtp, r.idfp, r.idfn);
    r.sequences = std::move(sequences);
    return r;
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "idf1=" << text::format_double(idf1) << "\nidtp=" << idtp << "\nidfp=" << idfp << "\nidfn=" << idfn
        << "\nid_switches=" << id_switches << "\n";
    for (const auto& s : sequences) {
        out << "sequence." << s.name << ".idf1=" << text::format_double(s.idf1) << "\n";
        out << "sequence." << s.name << ".id_switches=" << s.id_switches << "\n";
    }
    return out.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "sequence,idf1,idtp,idfp,idfn,id_switches\n";
    for (const auto& s : sequences) {
        out << s.name << ',' << text::format_double(s.idf1) << ',' << s.idtp << ',' << s.idfp << ',' << s.idfn << ','
            << s.id_switches << '\n';
    }
    out << "all," << text::format_double(idf1) << ',' << idtp << ',' << idfp << ',' << idfn << ',' << id_switches
        << '\n';
    return out.str();
}

std::int64_t HierarchyStats::total_edges() const {
    std::int64_t n = 0;
    for (const auto& l : levels) n += l.edges;
    return n;
}

std::int64_t HierarchyStats::total_positives() const {
    std::int64_t n = 0;
    for (const auto& l : levels) n += l.positives;
    return n;
}

double HierarchyStats::positive_ratio() const {
    const auto e = total_edges();
    return e == 0 ? 0.0 : static_cast<double>(total_positives()) / static_cast<double>(e);
}

void EdgeStatsCollector::observe(const AssociationGraph& graph) {
    const auto labels = graph.labels ? *graph.labels : assign_edge_labels(graph);
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    auto& lvl = stats_.levels.at(static_cast<std::size_t>(graph.level));
    ++lvl.graphs;
    lvl.nodes += static_cast<std::int64_t>(graph.num_nodes());
    lvl.edges += static_cast<std::int64_t>(graph.num_edges());
    lvl.positives += positives;
    if (positives > 2 * static_cast<std::int64_t>(graph.num_nodes())) ++stats_.bound_violations;
}

GraphObserver EdgeStatsCollector::observer() {
    return [this](const AssociationGraph& g, std::span<const int>) { observe(g); };
}

HierarchyStats edge_stats(std::span<const AssociationGraph> graphs, int num_levels) {
    EdgeStatsCollector c(num_levels);
    for (const auto& g : graphs) c.observe(g);
    return c.stats();
}

HierarchyStats oracle_upper_bound(std::span<const Detection> detections, const EmbeddingTable& embeddings,
                                  const HierarchyConfig& config, const WindowPlan& plan) {
    config.validate(/*allow_zero_k=*/true);
    EdgeStatsCollector collector(config.num_levels());
    const auto trajectories =
        track_sequence(detections, embeddings, config, plan, oracle_scores, collector.observer(), 1, false);
    HierarchyStats stats = collector.stats();
    const auto gt = gt_rows(detections);
    stats.oracle_idf1 = gt.empty() ? 0.0 : idf1(to_rows(trajectories), gt).idf1;
    return stats;
}

}  // namespace hiertrack
