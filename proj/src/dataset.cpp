#include "riskplan/dataset.hpp"

namespace riskplan {

void TransitionDataset::append(const State& state, const Action& action,
                               const State& next_state) {
    if (state_dim_ == 0 && action_dim_ == 0) {
        state_dim_ = static_cast<int>(state.size());
        action_dim_ = static_cast<int>(action.size());
    }
    require(state.size() == state_dim_ && next_state.size() == state_dim_,
            "transition state dimension mismatch");
    require(action.size() == action_dim_, "transition action dimension mismatch");
    require(state.allFinite() && action.allFinite() && next_state.allFinite(),
            "non-finite transition");
    states_.push_back(state);
    actions_.push_back(action);
    next_states_.push_back(next_state);
}

void TransitionDataset::gather(const std::vector<int>& idx, Eigen::MatrixXd& states,
                               Eigen::MatrixXd& actions,
                               Eigen::MatrixXd& next_states) const {
    const auto n = static_cast<Eigen::Index>(idx.size());
    states.resize(n, state_dim_);
    actions.resize(n, action_dim_);
    next_states.resize(n, state_dim_);
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::size_t i = static_cast<std::size_t>(idx[static_cast<std::size_t>(r)]);
        states.row(r) = states_[i].transpose();
        actions.row(r) = actions_[i].transpose();
        next_states.row(r) = next_states_[i].transpose();
    }
}

Eigen::MatrixXd TransitionDataset::input_matrix() const {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(size()), state_dim_ + action_dim_);
    for (std::size_t i = 0; i < size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) << states_[i].transpose(),
            actions_[i].transpose();
    }
    return rows;
}

}  // namespace riskplan
