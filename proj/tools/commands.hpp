#pragma once

#include "hiertrack/config.hpp"
#include "hiertrack/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hiertrack::cli {

namespace fs = std::filesystem;

/// Writes one sequence into `out`, or `scenario.sequences` subdirectories seq000, seq001, ...
void cmd_generate(const RunConfig& config, const fs::path& out);

struct TrainOptions {
    fs::path data;
    fs::path checkpoint_out;
    std::optional<fs::path> resume;
    int threads = 1;
};

/// Returns the iteration count stored in the written checkpoint. One log line per step goes to `log`.
std::uint64_t cmd_train(const RunConfig& config, const TrainOptions& options, std::ostream& log);

enum class ScoreSource { Network, Oracle, Constant };

struct TrackOptions {
    fs::path data;
    fs::path out;
    ScoreSource source = ScoreSource::Network;
    std::optional<fs::path> checkpoint;
    double constant = 0.5;
    bool interpolate = true;
    int threads = 1;
};

/// A single sequence directory produces one CSV at `out`; a dataset produces `out/<name>.csv`.
void cmd_track(const RunConfig& config, const TrackOptions& options);

/// `pred` is a track CSV or a directory of them; `gt` is a gt CSV, a sequence directory or a dataset.
EvalReport cmd_eval(const fs::path& pred, const fs::path& gt, const EvalOptions& options);

struct NamedConfig {
    std::string name;
    RunConfig config;
};

/// CSV with one row per (config, level) and an "all" row carrying the oracle IDF1.
std::string cmd_analyze(const fs::path& data, const std::vector<NamedConfig>& configs);

/// Hierarchy fields that a checkpoint fixes, copied into `config`.
void adopt_checkpoint_shape(RunConfig& config, const ModelConfig& model);

}  // namespace hiertrack::cli
