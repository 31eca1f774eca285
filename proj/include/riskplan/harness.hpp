#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "riskplan/config.hpp"
#include "riskplan/dataset.hpp"
#include "riskplan/env.hpp"
#include "riskplan/ground_truth.hpp"

namespace riskplan {

struct EpisodeLog {
    std::vector<State> states;   // rollout_length + 1 unless terminated early
    std::vector<Action> actions;
    std::vector<double> rewards;
    std::vector<int> violations;             // 0/1 per step
    std::vector<CostBreakdown> plan_costs;   // executed sequence terms per step
    double total_reward = 0.0;
    bool success = false;  // terminal event that was not a violation (goal)
    int violation_count = 0;
    double mean_plan_seconds = 0.0;
};

/// Runs one closed-loop episode: plan, execute first action, repeat. Planner
/// seeds derive from seed.child(step); the environment stream from its own
/// child, so episode randomness is independent of planner randomness.
EpisodeLog run_episode(Environment& env, const DynamicsModel& model,
                       const PlannerConfig& planner_config, int max_steps, Seed seed);

/// Builds the model an experiment plans with: "ground_truth" wraps the
/// environment, "ensemble" constructs an untrained EnsembleModel (trained by
/// run_training or loaded from a checkpoint by run_eval).
std::unique_ptr<DynamicsModel> make_planning_model(const ExperimentConfig& cfg,
                                                   std::shared_ptr<const Environment> env,
                                                   Seed seed);

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 1 numeric failure, 2 invalid config
    std::string message;
};

/// Alternates data collection and model fitting per the schedule, writing
/// run.csv (one row per iteration x episode), episodes/*.csv step logs,
/// model.ckpt and summary.json under cfg.output_dir. All randomness derives
/// from cfg.seed; identical (config, seed) reruns produce identical files.
/// A numeric failure keeps everything written so far and reports exit 1.
RunOutcome run_training(const ExperimentConfig& cfg);

/// Evaluation episodes with a fixed model: a checkpoint for type "ensemble"
/// (path required), the exact simulator for "ground_truth". Emits one row
/// per episode plus summary.json with binomial standard errors.
RunOutcome run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path);

/// Cross product of the sweep parameter grid; point i runs under
/// seed.child(i) in <out>/point_<i>/, and sweep.csv collects one row per
/// point keyed by the parameter values. Individual failures are recorded
/// and do not stop the sweep.
RunOutcome run_sweep(const nlohmann::json& config_with_sweep_block);

}  // namespace riskplan
