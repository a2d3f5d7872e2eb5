#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "recdyn/bench.hpp"
#include "recdyn/dynamics.hpp"
#include "recdyn/nets.hpp"
#include "recdyn/oracle.hpp"

namespace recdyn {

/// Fully resolved run configuration: the file format is sectioned key=value
/// text ('#' starts a comment) with sections [system], [train], [experiment],
/// [oracle], and [output]. Unknown sections or keys are rejected.
struct RunConfig {
    SystemSpec system = SystemSpec::preset("lorenz63");
    std::uint64_t seed = 1; // simulate/diagnostics/oracle seed
    long n_keep = 20000;
    long n_transient = 1000;

    TrainConfig train;
    ExperimentConfig experiment;

    std::vector<int> oracle_delays = {1, 2, 3, 4, 5, 6, 7, 8};
    EstimatorKind estimator = EstimatorKind::LocalLinear;
    bool with_sigma = true;

    std::filesystem::path output_dir = "out";
    bool plot = true;
    bool parallel = true;

    /// Experiment config with the system and train blocks folded in.
    ExperimentConfig resolved_experiment() const;

    void validate() const;
};

RunConfig parse_config_file(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Applies one "section.key=value" assignment; both the file parser and the
/// command-line --set overrides funnel through here.
void apply_config_value(RunConfig& config, const std::string& section, const std::string& key,
                        const std::string& value);

nlohmann::json config_to_json(const RunConfig& config);

} // namespace recdyn
