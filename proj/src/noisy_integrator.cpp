#include "riskplan/noisy_integrator.hpp"

#include <cmath>

namespace riskplan {

namespace {
double clip_unit(double u) { return std::min(std::max(u, -1.0), 1.0); }
}  // namespace

NoisyIntegrator::NoisyIntegrator(EnvNoiseConfig noise) : noise_(std::move(noise)) {
    noise_.validate();
    state_ = State::Zero(3);
}

State NoisyIntegrator::next_state(const State& state, const Eigen::Vector2d& applied_action) {
    require(state.size() == 3, "integrator state must have 3 dims");
    State next(3);
    next(0) = state(0) + state(1) * integrator::kDt;
    next(1) = state(1) + integrator::kDt * (integrator::kDriveGain * applied_action(0) -
                                            integrator::kDamping * state(1));
    next(2) = state(2) + integrator::kDt * (integrator::kLiftGain * applied_action(1) -
                                            integrator::kHeightDecay * state(2));
    next(2) = std::max(0.0, next(2));  // the ground
    return next;
}

State NoisyIntegrator::reset(Seed seed) {
    state_ = State::Zero(3);
    noise_rng_ = Rng(seed);
    return state_;
}

StepResult NoisyIntegrator::step(const Action& action) {
    require(action.size() == 2 && action.allFinite(), "bad integrator action");
    Eigen::Vector2d applied(clip_unit(action(0)), clip_unit(action(1)));
    if (state_(1) > noise_.action_noise.velocity_gate) {
        const double sigma = std::sqrt(noise_.action_noise.variance);
        applied(0) += noise_rng_.normal(0.0, sigma);
        applied(1) += noise_rng_.normal(0.0, sigma);
    }
    state_ = next_state(state_, applied);

    StepResult result;
    result.next_state = state_;
    result.reward = state_(1);  // forward velocity
    result.done = false;        // constraint crossings never end the episode
    result.violation = state_(2) > integrator::kCeiling;
    return result;
}

TrajectoryCostFn NoisyIntegrator::cost_fn() const {
    return lift_step_cost([](const Eigen::VectorXd& next, const Eigen::VectorXd&) {
        return -next(1);
    });
}

GaussianParams NoisyIntegrator::true_step_distribution(const State& state,
                                                       const Action& action) const {
    constexpr double kVarFloor = 1e-12;
    require(action.size() == 2, "integrator action must have 2 dims");
    const Eigen::Vector2d clipped(clip_unit(action(0)), clip_unit(action(1)));
    GaussianParams out;
    out.mean_delta = next_state(state, clipped) - state;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(3);
    if (state(1) > noise_.action_noise.velocity_gate) {
        // Action noise propagates through the gains scaled by dt.
        const double s2 = noise_.action_noise.variance;
        var(1) = integrator::kDt * integrator::kDt * integrator::kDriveGain *
                 integrator::kDriveGain * s2;
        var(2) = integrator::kDt * integrator::kDt * integrator::kLiftGain *
                 integrator::kLiftGain * s2;
    }
    out.log_var = var.cwiseMax(kVarFloor).array().log().matrix();
    return out;
}

BoxConstraint NoisyIntegrator::unsafe_box() const {
    BoxConstraint box;
    box.dims.assign(3, std::nullopt);
    box.dims[2] = Interval{integrator::kCeiling, integrator::kBoxTop};
    return box;
}

}  // namespace riskplan
