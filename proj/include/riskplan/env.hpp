#pragma once

#include <memory>
#include <string>
#include <vector>

#include "riskplan/planner.hpp"
#include "riskplan/rng.hpp"
#include "riskplan/safety.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

/// Disturbance parameters shared by the analytic environments. The wind part
/// drives the maze; the gated action noise drives the integrator. Magnitudes
/// must be nonnegative and the resample period at least 1.
struct WindConfig {
    double x0_lo = -8.0, x0_hi = 8.0;  // force active only inside this box
    double x1_lo = -1.2, x1_hi = 1.2;  // covers the middle bridge, not the detours
    double max_force = 8.0;   // amplitude ~ U(0, max_force), sign random; the
                              // calibrated maze default (= maze::kWindMaxForce)
    int resample_period = 5;  // steps between redraws
};

struct ActionNoiseConfig {
    double velocity_gate = 0.6;  // noise active when velocity exceeds this
    double variance = 0.2;       // per action dim, diagonal
};

struct EnvNoiseConfig {
    WindConfig wind;
    ActionNoiseConfig action_noise;

    void validate() const;  // throws ConfigError
};

struct StepResult {
    State next_state;
    double reward = 0.0;
    bool done = false;       // terminal event (goal or fall); integrator never sets it
    bool violation = false;  // safety event this step (fall / ceiling crossing)
};

/// A stateful episode simulator that also exposes the pure one-step Gaussian
/// approximation of its own dynamics (for the ground-truth ensemble) and its
/// planning cost (always -reward, with terminal events absorbing).
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string name() const = 0;
    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual Eigen::VectorXd action_lo() const = 0;
    virtual Eigen::VectorXd action_hi() const = 0;

    /// Starts a new episode; the seed fixes the full disturbance stream, so
    /// identical (seed, actions) replay bitwise identically.
    virtual State reset(Seed seed) = 0;
    virtual StepResult step(const Action& action) = 0;
    virtual const State& state() const = 0;

    /// Planning cost on an imagined trajectory: -reward per step, with goal
    /// and fall events latching (zero cost after absorption).
    virtual TrajectoryCostFn cost_fn() const = 0;

    /// Exact mean and variance of one step given (state, action), with the
    /// latent disturbance marginalized out. Variances are floored at 1e-12
    /// before the log so noise-free dims stay finite.
    virtual GaussianParams true_step_distribution(const State& state,
                                                  const Action& action) const = 0;

    /// Unsafe region for the safety term; empty when the task has none.
    virtual BoxConstraint unsafe_box() const { return {}; }
};

/// Factory for the config file's environment ids: "bridge_maze",
/// "noisy_integrator". Unknown id throws ConfigError.
std::unique_ptr<Environment> make_environment(const std::string& id,
                                              const EnvNoiseConfig& noise);

/// Fraction of occupied cells in a 50 x 50 grid over -20 <= x0 <= 20,
/// -10 <= x1 <= 15; states outside the range land in the edge bins. Only the
/// first two state dims are binned.
double coverage(const std::vector<State>& visited);

}  // namespace riskplan
