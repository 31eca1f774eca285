#include "riskplan/bridge_maze.hpp"

#include <cmath>

namespace riskplan {

namespace {

double clip_unit(double u) { return std::min(std::max(u, -1.0), 1.0); }

/// Clamp x into [lo, hi]; zeroes the paired velocity on contact.
void clamp_axis(double lo, double hi, double& x, double& v) {
    if (x < lo) {
        x = lo;
        v = 0.0;
    } else if (x > hi) {
        x = hi;
        v = 0.0;
    }
}

double shrinkage(double prev_x0, double next_x0) {
    return std::abs(prev_x0 - maze::kGoalLine) - std::abs(next_x0 - maze::kGoalLine);
}

}  // namespace

BridgeMaze::BridgeMaze(EnvNoiseConfig noise) : noise_(std::move(noise)) {
    noise_.validate();
    state_ = State::Zero(4);
}

bool BridgeMaze::on_surface(double x0, double x1) {
    if (std::abs(x0) >= maze::kPlatformEdge) return true;  // start/goal platforms
    const bool middle = x1 >= maze::kMiddleLo && x1 <= maze::kMiddleHi;
    const bool upper = x1 >= maze::kUpperLo && x1 <= maze::kUpperHi;
    const bool lower = x1 >= maze::kLowerLo && x1 <= maze::kLowerHi;
    return middle || upper || lower;
}

bool BridgeMaze::in_wind_band(const WindConfig& wind, double x0, double x1) {
    return x0 >= wind.x0_lo && x0 <= wind.x0_hi && x1 >= wind.x1_lo && x1 <= wind.x1_hi;
}

State BridgeMaze::next_state(const State& state, const Action& action, double wind_force) {
    require(state.size() == 4, "maze state must have 4 dims");
    require(action.size() == 2, "maze action must have 2 dims");
    const double u0 = clip_unit(action(0));
    const double u1 = clip_unit(action(1));

    State next(4);
    next(0) = state(0) + state(2) * maze::kDt;
    next(1) = state(1) + state(3) * maze::kDt;
    next(2) = state(2) + maze::kActionGain * u0 * maze::kDt - maze::kDamping * state(2) * maze::kDt;
    next(3) = state(3) + (maze::kActionGain * u1 + wind_force) * maze::kDt -
              maze::kDamping * state(3) * maze::kDt;

    clamp_axis(-maze::kArenaX0, maze::kArenaX0, next(0), next(2));
    clamp_axis(-maze::kArenaX1, maze::kArenaX1, next(1), next(3));
    // Upper-bridge walls: while crossing inside the walled span, x1 cannot
    // leave the bridge band no matter the force.
    if (state(1) >= maze::kUpperLo && state(1) <= maze::kUpperHi &&
        std::abs(next(0)) < maze::kPlatformEdge) {
        clamp_axis(maze::kUpperLo, maze::kUpperHi, next(1), next(3));
    }
    return next;
}

State BridgeMaze::reset(Seed seed) {
    state_ = State(4);
    state_ << -10.0, 0.0, 0.0, 0.0;
    wind_rng_ = Rng(seed);
    const double amplitude = wind_rng_.uniform(0.0, noise_.wind.max_force);
    wind_force_ = wind_rng_.coin() ? amplitude : -amplitude;
    steps_since_resample_ = 0;
    episode_over_ = false;
    return state_;
}

StepResult BridgeMaze::step(const Action& action) {
    require(!episode_over_, "episode is over; call reset");
    require(action.size() == 2 && action.allFinite(), "bad maze action");

    if (steps_since_resample_ >= noise_.wind.resample_period) {
        const double amplitude = wind_rng_.uniform(0.0, noise_.wind.max_force);
        wind_force_ = wind_rng_.coin() ? amplitude : -amplitude;
        steps_since_resample_ = 0;
    }
    const double active_wind =
        in_wind_band(noise_.wind, state_(0), state_(1)) ? wind_force_ : 0.0;
    ++steps_since_resample_;

    const State prev = state_;
    state_ = next_state(prev, action, active_wind);

    StepResult result;
    result.next_state = state_;
    if (state_(0) >= maze::kGoalLine) {  // goal outranks the fall check
        result.reward = maze::kGoalReward;
        result.done = true;
    } else if (!on_surface(state_(0), state_(1))) {
        result.reward = maze::kFallReward;
        result.done = true;
        result.violation = true;
    } else {
        result.reward = shrinkage(prev(0), state_(0));
    }
    episode_over_ = result.done;
    return result;
}

TrajectoryCostFn BridgeMaze::cost_fn() const {
    return [](const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
              Eigen::VectorXd& step_costs) {
        (void)actions;
        bool absorbed = false;
        for (Eigen::Index t = 0; t < step_costs.size(); ++t) {
            if (absorbed) {
                step_costs(t) = 0.0;
                continue;
            }
            const double prev_x0 = states(t, 0);
            const double next_x0 = states(t + 1, 0);
            const double next_x1 = states(t + 1, 1);
            if (next_x0 >= maze::kGoalLine) {
                step_costs(t) = -maze::kGoalReward;
                absorbed = true;
            } else if (!on_surface(next_x0, next_x1)) {
                step_costs(t) = -maze::kFallReward;
                absorbed = true;
            } else {
                step_costs(t) = -shrinkage(prev_x0, next_x0);
            }
        }
    };
}

GaussianParams BridgeMaze::true_step_distribution(const State& state,
                                                  const Action& action) const {
    constexpr double kVarFloor = 1e-12;
    const State mean_next = next_state(state, action, 0.0);
    GaussianParams out;
    out.mean_delta = mean_next - state;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(4);
    if (in_wind_band(noise_.wind, state(0), state(1))) {
        // Signed wind with amplitude ~ U(0, f) enters v1 scaled by dt:
        // Var = dt^2 * f^2 / 3.
        const double f = noise_.wind.max_force;
        var(3) = maze::kDt * maze::kDt * f * f / 3.0;
    }
    out.log_var = var.cwiseMax(kVarFloor).array().log().matrix();
    return out;
}

}  // namespace riskplan
