#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskplan/ensemble.hpp"
#include "riskplan/env.hpp"
#include "riskplan/planner.hpp"

namespace riskplan {

struct ModelConfig {
    std::string type = "ensemble";  // "ensemble" | "ground_truth"
    int members = 5;
    int hidden_layers = 2;
    int hidden_size = 64;
    double min_log_var = -10.0;
    double max_log_var = 4.0;
    FitConfig fit;
};

struct ScheduleConfig {
    int rollouts_per_iter = 5;
    int rollout_length = 80;
    int fit_epochs = 25;
    int iterations = 10;
};

struct EvalConfig {
    int episodes = 50;
    int rollout_length = 80;
};

/// Everything one experiment needs. The planner's action bounds and unsafe
/// box are filled from the environment at run time; a config-level
/// safety_box replaces the environment's box when present.
struct ExperimentConfig {
    std::string environment_id = "bridge_maze";
    EnvNoiseConfig noise;
    ModelConfig model;
    PlannerConfig planner;
    std::optional<std::vector<std::optional<Interval>>> safety_box;
    ScheduleConfig schedule;
    EvalConfig evaluation;
    std::uint64_t seed = 0;
    std::string output_dir = "run_out";

    void validate() const;  // throws ConfigError
};

/// Strict parse: any key the schema does not know is a hard error, so a
/// misspelled hyperparameter can never silently fall back to a default.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);

ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical JSON echo of a parsed config; equal configs produce equal text.
nlohmann::json experiment_config_json(const ExperimentConfig& cfg);

/// Applies a --override assignment like "planner.horizon=20" to raw config
/// JSON; the value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// FNV-1a 64 over the canonical dump; recorded in every output file.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

}  // namespace riskplan
