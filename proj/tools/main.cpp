#include "commands.hpp"

#include "hiertrack/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <thread>

using namespace hiertrack;
using namespace hiertrack::cli;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return 2;
        case ErrorKind::InvalidConfig: return 3;
        case ErrorKind::Io: return 4;
        case ErrorKind::Contract: return 5;
    }
    return 1;
}

std::string one_line(std::string s) {
    for (auto& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical graph tracker: generate, train, track, eval, analyze"};
    app.set_version_flag("--version", std::string("hiertrack ") + HIERTRACK_VERSION);
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    const unsigned hw = std::thread::hardware_concurrency();
    int threads = hw == 0 ? 1 : static_cast<int>(hw);
    bool print_params = false;
    app.add_option("-c,--config", config_path, "key=value configuration file");
    app.add_option("--set", overrides, "Override a config key (key=value), repeatable");
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--print-param-count", print_params, "Print the network's scalar parameter count");

    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
    std::string gen_out;
    gen->add_option("-o,--out", gen_out, "Output directory")->required();

    auto* tr = app.add_subcommand("train", "Train the network");
    TrainOptions train_opts;
    std::string resume, log_path;
    tr->add_option("-d,--data", train_opts.data, "Sequence or dataset directory")->required();
    tr->add_option("-o,--out", train_opts.checkpoint_out, "Checkpoint to write")->required();
    tr->add_option("--resume", resume, "Continue from this checkpoint");
    tr->add_option("--log", log_path, "Training log file (default: stdout)");

    auto* tk = app.add_subcommand("track", "Track a sequence or dataset");
    TrackOptions track_opts;
    std::string checkpoint;
    bool oracle = false, no_interp = false;
    double constant = -1.0;
    tk->add_option("-d,--data", track_opts.data, "Sequence or dataset directory")->required();
    tk->add_option("-o,--out", track_opts.out, "Track CSV (one sequence) or output directory")->required();
    auto* ck = tk->add_option("--checkpoint", checkpoint, "Trained checkpoint");
    auto* orc = tk->add_flag("--oracle", oracle, "Score edges with ground-truth labels");
    auto* cst = tk->add_option("--constant", constant, "Score every edge with this value")->check(CLI::Range(0.0, 1.0));
    ck->excludes(orc)->excludes(cst);
    orc->excludes(cst);
    tk->add_flag("--no-interpolate", no_interp, "Leave frame gaps unfilled");

    auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
    std::string pred, gt, eval_csv;
    ev->add_option("-p,--pred", pred, "Track CSV or directory of them")->required();
    ev->add_option("-g,--gt", gt, "gt.csv, sequence directory or dataset directory")->required();
    ev->add_option("--csv", eval_csv, "Also write the per-sequence report as CSV");

    auto* an = app.add_subcommand("analyze", "Oracle edge statistics for hierarchy variants");
    std::string analyze_data, analyze_out;
    std::vector<std::string> variants;
    an->add_option("-d,--data", analyze_data, "Sequence or dataset directory")->required();
    an->add_option("--variant", variants, "Config file of a hierarchy variant, repeatable");
    an->add_option("-o,--out", analyze_out, "CSV output (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error[Usage]: " << one_line(e.what()) << "\n";
        return 64;
    }

    try {
        RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        apply_overrides(config, overrides);

        if (print_params) {
            config.model_config().validate();
            std::cout << ModelParams::initialize(config.model_config(), 0).parameter_count() << "\n";
            if (app.get_subcommands().empty()) return 0;
        }
        if (*gen) {
            cmd_generate(config, gen_out);
        } else if (*tr) {
            if (!resume.empty()) train_opts.resume = resume;
            train_opts.threads = threads;
            if (log_path.empty()) {
                cmd_train(config, train_opts, std::cout);
            } else {
                std::ofstream log(log_path, std::ios::binary);
                if (!log) throw Error(ErrorKind::Io, "cannot write " + log_path);
                cmd_train(config, train_opts, log);
            }
        } else if (*tk) {
            track_opts.threads = threads;
            track_opts.interpolate = !no_interp;
            if (oracle) {
                track_opts.source = ScoreSource::Oracle;
            } else if (constant >= 0.0) {
                track_opts.source = ScoreSource::Constant;
                track_opts.constant = constant;
            } else {
                if (checkpoint.empty()) throw Error(ErrorKind::InvalidConfig, "track needs --checkpoint, --oracle or --constant");
                track_opts.checkpoint = checkpoint;
                // Without a config file the checkpoint decides the network shape.
                if (config_path.empty()) {
                    adopt_checkpoint_shape(config, load_checkpoint(checkpoint).params.config);
                    apply_overrides(config, overrides);
                }
            }
            cmd_track(config, track_opts);
        } else if (*ev) {
            const auto report = cmd_eval(pred, gt, config.eval);
            std::cout << report.to_text();
            if (!eval_csv.empty()) write_file(eval_csv, report.to_csv());
        } else if (*an) {
            std::vector<NamedConfig> configs;
            if (variants.empty()) configs.push_back({config_path.empty() ? "default" : fs::path(config_path).stem().string(), config});
            for (const auto& v : variants) {
                RunConfig c = RunConfig::load(v);
                apply_overrides(c, overrides);
                configs.push_back({fs::path(v).stem().string(), c});
            }
            const std::string csv = cmd_analyze(analyze_data, configs);
            if (analyze_out.empty()) std::cout << csv;
            else write_file(analyze_out, csv);
        } else if (!print_params) {
            std::cerr << "error[Usage]: a subcommand is required (generate, train, track, eval, analyze)\n";
            return 64;
        }
    } catch (const Error& e) {
        std::cerr << "error[" << error_kind_name(e.kind()) << "]: " << one_line(e.what()) << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error[Internal]: " << one_line(e.what()) << "\n";
        return 70;
    }
    return 0;
}
