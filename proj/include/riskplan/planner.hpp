#pragma once

#include <functional>
#include <vector>

#include "riskplan/colored_noise.hpp"
#include "riskplan/propagate.hpp"
#include "riskplan/safety.hpp"
#include "riskplan/types.hpp"
#include "riskplan/uncertainty.hpp"

namespace riskplan {

/// Scores one particle trajectory: given the visited states (H+1 x d, row 0
/// the start state) and the actions taken (H x m), fills step_costs (length
/// H) with the cost of each step. Trajectory-level so cost functions can
/// latch terminal events (a fall or a reached goal stays absorbed for the
/// rest of the horizon).
using TrajectoryCostFn =
    std::function<void(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                       Eigen::VectorXd& step_costs)>;

/// Lifts a memoryless step cost c(next_state, action) into a TrajectoryCostFn;
/// step t is charged c(states.row(t + 1), actions.row(t)).
TrajectoryCostFn lift_step_cost(
    std::function<double(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action)> step_cost);

/// Cross-entropy MPC configuration. Defaults are the tuned values for the
/// maze task; action bounds have no default and must be set.
struct PlannerConfig {
    int horizon = 30;
    int num_samples = 128;  // fresh candidates per optimization round
    int num_particles = 20;
    int elite_size = 10;
    int opt_iterations = 3;
    double noise_beta = 2.0;  // colored-noise exponent; 0 = white
    double alpha = 0.1;       // refit momentum: new = (1 - alpha) * elite_stat + alpha * old
    double init_std = 0.5;    // in units of half the action range per dim
    double fraction_elites_reused = 0.3;
    bool keep_previous_elites = true;   // carry the elite pool across rounds
    bool shift_elites_over_time = true; // re-seed from time-shifted elites next step
    bool execute_best_elite = true;     // false: execute the refit mean's first action
    bool use_mean_actions = true;       // inject the current mean as a candidate
    bool relative_init = true;          // warm-start the mean from the shifted previous solution

    Eigen::VectorXd action_lo;
    Eigen::VectorXd action_hi;

    CostWeights weights;
    AleatoricMeasure aleatoric_measure = AleatoricMeasure::kVariance;
    BoxConstraint unsafe_box;   // unsafe region; empty = no safety term
    double safety_delta = 0.0;  // threshold on per-step violation probability

    int action_dim() const { return static_cast<int>(action_lo.size()); }
    void validate() const;  // throws ConfigError
};

/// Warm-start state carried between consecutive plan steps. Stored elites
/// keep only their action sequences; costs are always recomputed against the
/// current state and model.
struct PlannerState {
    Eigen::MatrixXd mean;  // H x m
    std::vector<ActionSequence> stored_elites;
    bool initialized = false;

    void reset() {
        mean.resize(0, 0);
        stored_elites.clear();
        initialized = false;
    }
};

/// Weighted cost terms of one candidate; epistemic is already negated.
struct CostBreakdown {
    double task = 0.0;
    double aleatoric = 0.0;
    double epistemic = 0.0;
    double safety = 0.0;

    double total() const { return task + aleatoric + epistemic + safety; }
};

struct PlanDiagnostics {
    std::vector<double> best_total_per_round;  // non-increasing (elites are kept)
    std::vector<double> mean_total_per_round;  // over the round's finite candidates
    CostBreakdown executed;                    // terms of the chosen sequence
    int failed_candidates = 0;                 // non-finite rollouts discarded
};

struct PlanResult {
    Action action;          // first action of the chosen sequence
    ActionSequence chosen;  // full chosen sequence
    PlanDiagnostics diagnostics;
};

/// Advances a sequence one step: drops the first action, repeats the last.
ActionSequence shift_sequence(const ActionSequence& seq);

/// Scores one action sequence against the model: TS1 particle rollout, task
/// cost averaged over particles, uncertainty and safety terms per config.
/// Throws NumericError naming the failing step if the rollout goes
/// non-finite.
CostBreakdown evaluate_sequence(const DynamicsModel& model, const State& state,
                                const ActionSequence& actions,
                                const TrajectoryCostFn& cost_fn,
                                const PlannerConfig& config, Seed seed);

/// One planning step: opt_iterations rounds of sample / evaluate / refit
/// with colored noise, elite reuse and momentum. On return the planner state
/// holds the refit mean shifted by one step (tail padded with the last
/// action) and the elites to re-seed the next call. Deterministic in (model,
/// state, planner state, config, seed). Throws NumericError if every
/// candidate of a round fails non-finite.
PlanResult plan_step(const DynamicsModel& model, const State& state,
                     const TrajectoryCostFn& cost_fn, const PlannerConfig& config,
                     PlannerState& planner_state, Seed seed);

}  // namespace riskplan
