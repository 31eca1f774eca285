#pragma once

#include <Eigen/Core>

#include "riskplan/types.hpp"

namespace riskplan {

/// One-step stochastic dynamics backed by an ensemble of predictors. Each
/// member maps (state, action) to a diagonal Gaussian over the state delta.
/// Implementations must be pure given their parameters: planning holds a
/// snapshot and may query members concurrently.
class DynamicsModel {
public:
    virtual ~DynamicsModel() = default;

    virtual int member_count() const = 0;
    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;

    /// Batched prediction by a single member, one sample per row.
    virtual GaussianBatch forward_batch(int member, const Eigen::MatrixXd& states,
                                        const Eigen::MatrixXd& actions) const = 0;

    /// Single-sample convenience wrapper.
    GaussianParams forward(int member, const State& state, const Action& action) const {
        GaussianBatch b = forward_batch(member, state.transpose(), action.transpose());
        return b.row(0);
    }
};

}  // namespace riskplan
