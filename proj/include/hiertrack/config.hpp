#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/metrics.hpp"
#include "hiertrack/mpn.hpp"
#include "hiertrack/synth.hpp"
#include "hiertrack/training.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hiertrack {

/// Everything a command may need, read from flat `section.key = value` text.
struct RunConfig {
    HierarchyConfig hierarchy;
    ModelConfig model;  // level sizes and dimensions are taken from `hierarchy`
    TrainConfig train;
    int window_length = 150;
    int window_stride = 75;
    EvalOptions eval;
    ScenarioConfig scenario;
    int num_sequences = 1;

    ModelConfig model_config() const;
    WindowPlan window_plan(int sequence_end) const;

    /// Throws Error(InvalidConfig).
    void validate() const;

    /// Applies one `key=value` assignment. Unknown keys throw Error(InvalidConfig) naming the key.
    void set(std::string_view key, std::string_view value);

    /// Canonical text of every key, parseable by `parse`.
    std::string to_text() const;

    static RunConfig parse(std::string_view content, std::string_view source = "config");
    static RunConfig load(const std::filesystem::path& path);
};

/// Applies `key=value` overrides in order.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

}  // namespace hiertrack
