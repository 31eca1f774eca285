#pragma once

#include "riskplan/env.hpp"

namespace riskplan {

/// Fixed maze geometry. The wind band, goal line and fall rule are given;
/// everything else is chosen so that every crossing fits inside an 80-step
/// episode with planning slack: the middle route is the shortest, the lower
/// detour the second shortest, and the walled upper detour the longest. The
/// detour bridges sit just outside the wind band so a sampled arc that dips
/// a few units sideways can discover them.
namespace maze {
inline constexpr double kDt = 0.1;
inline constexpr double kDamping = 2.0;
inline constexpr double kActionGain = 10.0;  // tau = gain * u, u in [-1, 1]

inline constexpr double kArenaX0 = 14.0;  // outer walls clamp |x0|, |x1|
inline constexpr double kArenaX1 = 8.0;
inline constexpr double kPlatformEdge = 8.0;  // platforms at 8 <= |x0| <= 14
inline constexpr double kGoalLine = 12.0;     // success at x0 >= 12

// Bridges span -8 <= x0 <= 8; everything else in that band is lava.
inline constexpr double kMiddleLo = -0.8, kMiddleHi = 0.8;
inline constexpr double kUpperLo = 2.0, kUpperHi = 3.2;  // walled
inline constexpr double kLowerLo = -3.2, kLowerHi = -1.6;

// Signed wind force on v1, amplitude ~ U(0, max), redrawn every 5 steps,
// active only inside the wind band (covers the middle bridge only). The
// maximum is calibrated against the closed-loop planner, which corrects
// drift at every replan and therefore tolerates far more wind than an
// open-loop crossing: at 8.0 a risk-neutral receding-horizon agent loses
// roughly a third of its middle crossings to falls (tools/calibrate_wind
// measures the curve). WindConfig's default must match.
inline constexpr double kWindMaxForce = 8.0;

inline constexpr double kGoalReward = 0.0;
inline constexpr double kFallReward = -1.0;
}  // namespace maze

/// Damped point mass on two platforms joined by three bridges over lava.
/// State (x0, x1, v0, v1), start (-10, 0, 0, 0), actions are forces in
/// [-1, 1]^2. Reward is the per-step shrinkage of |x0 - 12| while on a
/// walkable surface, 0 on reaching the goal, -1 on falling; goal is checked
/// before the fall. Wind disturbs v1 inside the wind band.
class BridgeMaze final : public Environment {
public:
    explicit BridgeMaze(EnvNoiseConfig noise = {});

    std::string name() const override { return "bridge_maze"; }
    int state_dim() const override { return 4; }
    int action_dim() const override { return 2; }
    Eigen::VectorXd action_lo() const override { return Eigen::Vector2d(-1, -1); }
    Eigen::VectorXd action_hi() const override { return Eigen::Vector2d(1, 1); }

    State reset(Seed seed) override;
    StepResult step(const Action& action) override;
    const State& state() const override { return state_; }

    TrajectoryCostFn cost_fn() const override;
    GaussianParams true_step_distribution(const State& state,
                                          const Action& action) const override;

    static bool on_surface(double x0, double x1);
    static bool in_wind_band(const WindConfig& wind, double x0, double x1);

    /// One step with an explicit wind force (0 = calm); applies arena and
    /// upper-bridge wall clamping. The pure kernel behind everything above.
    static State next_state(const State& state, const Action& action, double wind_force);

private:
    EnvNoiseConfig noise_;
    State state_;
    Rng wind_rng_{Seed{0}};
    double wind_force_ = 0.0;
    int steps_since_resample_ = 0;
    bool episode_over_ = true;
};

}  // namespace riskplan
