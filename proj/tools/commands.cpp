#include "commands.hpp"

#include "hiertrack/io.hpp"
#include "hiertrack/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

namespace hiertrack::cli {

namespace {

std::string sequence_dir_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "seq%03d", i);
    return buf;
}

}  // namespace

void cmd_generate(const RunConfig& config, const fs::path& out) {
    config.validate();
    if (config.num_sequences == 1) {
        write_scenario(out, generate(config.scenario));
        return;
    }
    for (int i = 0; i < config.num_sequences; ++i) {
        ScenarioConfig sc = config.scenario;
        sc.seed = config.scenario.seed + static_cast<std::uint64_t>(i);
        write_scenario(out / sequence_dir_name(i), generate(sc));
    }
}

std::uint64_t cmd_train(const RunConfig& config, const TrainOptions& options, std::ostream& log) {
    config.validate();
    const auto sequences = load_dataset(options.data);
    std::vector<TrainingClip> clips;
    for (const auto& s : sequences) {
        auto emb = std::make_shared<const EmbeddingTable>(s.embeddings);
        for (auto& c : make_clips(s.detections, emb, config.hierarchy.clip_length())) {
            if (std::any_of(c.detections.begin(), c.detections.end(),
                            [](const Detection& d) { return d.gt_identity.has_value(); })) {
                clips.push_back(std::move(c));
            }
        }
    }
    if (clips.empty()) throw Error(ErrorKind::InvalidInput, "no labeled training clips in " + options.data.string());

    const ModelConfig model = config.model_config();
    Checkpoint ckpt;
    if (options.resume) {
        ckpt = load_checkpoint(*options.resume, model);
    } else {
        ckpt.params = ModelParams::initialize(model, config.train.seed);
    }
    OptimizerState optimizer = ckpt.optimizer.value_or(OptimizerState{});
    const auto result = train(clips, ckpt.params, optimizer, ckpt.iteration, config.train, config.hierarchy,
                              options.threads, [&](const StepReport& r) { log << r.to_log_line() << '\n' << std::flush; });
    ckpt.iteration = std::max(ckpt.iteration, result.iteration);
    ckpt.optimizer = optimizer;
    save_checkpoint(options.checkpoint_out, ckpt);
    return ckpt.iteration;
}

void cmd_track(const RunConfig& config, const TrackOptions& options) {
    config.validate();
    EdgeScorer scorer;
    switch (options.source) {
        case ScoreSource::Network: {
            if (!options.checkpoint) throw Error(ErrorKind::InvalidConfig, "tracking with the network needs a checkpoint");
            scorer = network_scorer(load_checkpoint(*options.checkpoint, config.model_config()).params);
            break;
        }
        case ScoreSource::Oracle: scorer = oracle_scores; break;
        case ScoreSource::Constant: scorer = constant_scorer(options.constant); break;
    }
    const bool single = fs::exists(options.data / kDetectionsFile);
    const auto sequences = load_dataset(options.data);
    if (!single) {
        std::error_code ec;
        fs::create_directories(options.out, ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create " + options.out.string() + ": " + ec.message());
    }
    for (const auto& s : sequences) {
        const auto trajectories = track_sequence(s.detections, s.embeddings, config.hierarchy,
                                                 config.window_plan(s.frame_end()), scorer, {}, options.threads,
                                                 options.interpolate);
        write_tracks_csv(single ? options.out : options.out / (s.name + ".csv"), to_rows(trajectories));
    }
}

EvalReport cmd_eval(const fs::path& pred, const fs::path& gt, const EvalOptions& options) {
    auto gt_file = [](const fs::path& p) { return fs::is_directory(p) ? p / kGroundTruthFile : p; };
    auto one = [&](const std::string& name, const fs::path& p, const fs::path& g) {
        if (!fs::exists(p)) throw Error(ErrorKind::Io, "missing prediction file " + p.string());
        if (!fs::exists(g)) throw Error(ErrorKind::Io, "missing ground-truth file " + g.string());
        const auto r = idf1(read_tracks_csv(p), read_tracks_csv(g), options);
        return SequenceReport{name, r.idf1, r.idtp, r.idfp, r.idfn, r.id_switches};
    };
    std::vector<SequenceReport> reports;
    if (fs::is_directory(pred)) {
        std::vector<fs::path> seqs;
        if (fs::is_directory(gt)) {
            for (const auto& e : fs::directory_iterator(gt)) {
                if (e.is_directory() && fs::exists(e.path() / kGroundTruthFile)) seqs.push_back(e.path());
            }
        }
        if (seqs.empty()) throw Error(ErrorKind::Io, "no ground-truth sequences in " + gt.string());
        std::sort(seqs.begin(), seqs.end());
        for (const auto& g : seqs) {
            const std::string name = g.filename().string();
            reports.push_back(one(name, pred / (name + ".csv"), g / kGroundTruthFile));
        }
    } else {
        reports.push_back(one(pred.stem().string(), pred, gt_file(gt)));
    }
    return combine(std::move(reports));
}

std::string cmd_analyze(const fs::path& data, const std::vector<NamedConfig>& configs) {
    const auto sequences = load_dataset(data);
    std::ostringstream out;
    out << "config,levels,knn_k,level,graphs,nodes,edges,positives,positive_ratio,oracle_idf1,bound_violations\n";
    for (const auto& [name, config] : configs) {
        config.hierarchy.validate(/*allow_zero_k=*/true);
        const int num_levels = config.hierarchy.num_levels();
        EdgeStatsCollector collector(num_levels);
        std::vector<SequenceReport> idf;
        for (const auto& s : sequences) {
            const auto tracks = track_sequence(s.detections, s.embeddings, config.hierarchy,
                                               config.window_plan(s.frame_end()), oracle_scores,
                                               collector.observer(), 1, false);
            const auto r = idf1(to_rows(tracks), gt_rows(s.detections), config.eval);
            idf.push_back({s.name, r.idf1, r.idtp, r.idfp, r.idfn, r.id_switches});
        }
        const HierarchyStats& total = collector.stats();
        const double oracle = combine(std::move(idf)).idf1;
        const std::string prefix = name + ",\"" + text::format_int_list(config.hierarchy.level_window_sizes) + "\"," +
                                   std::to_string(config.hierarchy.knn_k) + ",";
        for (int l = 0; l < num_levels; ++l) {
            const auto& lv = total.levels[static_cast<std::size_t>(l)];
            out << prefix << (l + 1) << ',' << lv.graphs << ',' << lv.nodes << ',' << lv.edges << ',' << lv.positives
                << ',' << text::format_double(lv.positive_ratio()) << ",,\n";
        }
        std::int64_t graphs = 0, nodes = 0;
        for (const auto& lv : total.levels) {
            graphs += lv.graphs;
            nodes += lv.nodes;
        }
        out << prefix << "all," << graphs << ',' << nodes << ',' << total.total_edges() << ','
            << total.total_positives() << ',' << text::format_double(total.positive_ratio()) << ','
            << text::format_double(oracle) << ',' << total.bound_violations << '\n';
    }
    return out.str();
}

void adopt_checkpoint_shape(RunConfig& config, const ModelConfig& model) {
    config.hierarchy.level_window_sizes = model.level_window_sizes;
    config.hierarchy.node_dim = model.node_dim;
    config.hierarchy.edge_dim = model.edge_dim;
    config.hierarchy.message_passing_steps = model.steps;
    config.model = model;
}

}  // namespace hiertrack::cli
