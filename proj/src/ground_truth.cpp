#include "riskplan/ground_truth.hpp"

namespace riskplan {

GroundTruthEnsemble::GroundTruthEnsemble(std::shared_ptr<const Environment> env, int members)
    : env_(std::move(env)), members_(members) {
    require(env_ != nullptr, "ground-truth ensemble needs an environment");
    require(members_ >= 1, "ground-truth ensemble needs at least one member");
}

GaussianBatch GroundTruthEnsemble::forward_batch(int member, const Eigen::MatrixXd& states,
                                                 const Eigen::MatrixXd& actions) const {
    require(member >= 0 && member < members_, "member index out of range");
    require(states.rows() == actions.rows(), "state/action row mismatch");
    require(states.cols() == env_->state_dim(), "state dimension mismatch");
    require(actions.cols() == env_->action_dim(), "action dimension mismatch");

    const Eigen::Index n = states.rows();
    GaussianBatch out;
    out.mean_delta.resize(n, env_->state_dim());
    out.log_var.resize(n, env_->state_dim());
    for (Eigen::Index i = 0; i < n; ++i) {
        const GaussianParams p = env_->true_step_distribution(
            states.row(i).transpose(), actions.row(i).transpose());
        out.mean_delta.row(i) = p.mean_delta.transpose();
        out.log_var.row(i) = p.log_var.transpose();
    }
    return out;
}

}  // namespace riskplan
