#pragma once

// Shared test fakes: a dynamics model wrapping a lambda, and a hand-built
// ParticleBundle with consistent shapes that tests overwrite field by field.

#include <functional>
#include <utility>

#include "riskplan/model.hpp"
#include "riskplan/propagate.hpp"

namespace riskplan::testing {

class LambdaModel final : public DynamicsModel {
public:
    using Fn = std::function<GaussianBatch(int member, const Eigen::MatrixXd& states,
                                           const Eigen::MatrixXd& actions)>;

    LambdaModel(int members, int state_dim, int action_dim, Fn fn)
        : members_(members), state_dim_(state_dim), action_dim_(action_dim),
          fn_(std::move(fn)) {}

    int member_count() const override { return members_; }
    int state_dim() const override { return state_dim_; }
    int action_dim() const override { return action_dim_; }

    GaussianBatch forward_batch(int member, const Eigen::MatrixXd& states,
                                const Eigen::MatrixXd& actions) const override {
        return fn_(member, states, actions);
    }

private:
    int members_;
    int state_dim_;
    int action_dim_;
    Fn fn_;
};

/// Model x' = x + A u with constant per-dim log variance; state and action
/// dims must match. An optional per-member mean offset separates the members.
inline LambdaModel shift_model(int members, int dim, double log_var,
                               double member_offset = 0.0) {
    return LambdaModel(
        members, dim, dim,
        [log_var, member_offset](int member, const Eigen::MatrixXd& states,
                                 const Eigen::MatrixXd& actions) {
            GaussianBatch out;
            out.mean_delta = actions.array() + member_offset * member;
            out.log_var = Eigen::MatrixXd::Constant(states.rows(), states.cols(), log_var);
            return out;
        });
}

inline ParticleBundle make_bundle(int horizon, int particles, int members, int dim) {
    ParticleBundle b;
    for (int t = 0; t <= horizon; ++t) {
        b.particles.push_back(Eigen::MatrixXd::Zero(particles, dim));
        b.mean_paths.push_back(Eigen::MatrixXd::Zero(members, dim));
    }
    for (int t = 0; t < horizon; ++t) {
        GaussianBatch pp;
        pp.mean_delta = Eigen::MatrixXd::Zero(particles, dim);
        pp.log_var = Eigen::MatrixXd::Zero(particles, dim);
        b.particle_params.push_back(pp);
        GaussianBatch mp;
        mp.mean_delta = Eigen::MatrixXd::Zero(members, dim);
        mp.log_var = Eigen::MatrixXd::Zero(members, dim);
        b.mean_params.push_back(mp);
    }
    return b;
}

}  // namespace riskplan::testing
