#pragma once

#include "riskplan/env.hpp"

namespace riskplan {

namespace integrator {
inline constexpr double kDt = 0.1;
inline constexpr double kDriveGain = 4.0;  // forward force = gain * action[0]
inline constexpr double kDamping = 2.0;    // on v; top speed = gain / damping = 2
inline constexpr double kLiftGain = 3.0;   // height force = gain * action[1]
inline constexpr double kHeightDecay = 2.0;
inline constexpr double kCeiling = 0.3;  // h above this is a violation
inline constexpr double kBoxTop = 100.0; // far above anything reachable
}  // namespace integrator

/// 1-D cart with a height channel. State (x, v, h), actions (drive, lift) in
/// [-1, 1]^2. Reward is the next-state forward velocity. Whenever the
/// current velocity exceeds the gate, Gaussian noise is added to the clipped
/// action, so going fast makes both channels noisy; the ceiling at h = 0.3
/// turns that into a safety problem. Episodes never terminate; crossings are
/// only counted as violations.
class NoisyIntegrator final : public Environment {
public:
    explicit NoisyIntegrator(EnvNoiseConfig noise = {});

    std::string name() const override { return "noisy_integrator"; }
    int state_dim() const override { return 3; }
    int action_dim() const override { return 2; }
    Eigen::VectorXd action_lo() const override { return Eigen::Vector2d(-1, -1); }
    Eigen::VectorXd action_hi() const override { return Eigen::Vector2d(1, 1); }

    State reset(Seed seed) override;
    StepResult step(const Action& action) override;
    const State& state() const override { return state_; }

    TrajectoryCostFn cost_fn() const override;
    GaussianParams true_step_distribution(const State& state,
                                          const Action& action) const override;
    BoxConstraint unsafe_box() const override;

    /// Deterministic kernel: the update with the given (already noisy)
    /// action; h is clamped at the ground.
    static State next_state(const State& state, const Eigen::Vector2d& applied_action);

private:
    EnvNoiseConfig noise_;
    State state_;
    Rng noise_rng_{Seed{0}};
};

}  // namespace riskplan
