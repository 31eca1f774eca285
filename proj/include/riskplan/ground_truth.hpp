#pragma once

#include <memory>

#include "riskplan/env.hpp"
#include "riskplan/model.hpp"

namespace riskplan {

/// K simulator instances behind the ensemble interface. All members share
/// the environment's exact one-step Gaussian, so they differ only through
/// the per-particle noise streams drawn during propagation; ensemble
/// disagreement over this model vanishes up to the floating-point rounding
/// of the cross-member average.
class GroundTruthEnsemble final : public DynamicsModel {
public:
    GroundTruthEnsemble(std::shared_ptr<const Environment> env, int members);

    int member_count() const override { return members_; }
    int state_dim() const override { return env_->state_dim(); }
    int action_dim() const override { return env_->action_dim(); }

    GaussianBatch forward_batch(int member, const Eigen::MatrixXd& states,
                                const Eigen::MatrixXd& actions) const override;

private:
    std::shared_ptr<const Environment> env_;
    int members_;
};

}  // namespace riskplan
