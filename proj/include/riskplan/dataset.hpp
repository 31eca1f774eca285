#pragma once

#include <Eigen/Core>
#include <vector>

#include "riskplan/types.hpp"

namespace riskplan {

/// Growing store of (state, action, next_state) transitions. Rows are only
/// appended, never mutated, so indices stay stable across training iterations.
class TransitionDataset {
public:
    TransitionDataset() = default;
    TransitionDataset(int state_dim, int action_dim)
        : state_dim_(state_dim), action_dim_(action_dim) {}

    void append(const State& state, const Action& action, const State& next_state);

    std::size_t size() const { return states_.size(); }
    bool empty() const { return states_.empty(); }
    int state_dim() const { return state_dim_; }
    int action_dim() const { return action_dim_; }

    const State& state(std::size_t i) const { return states_[i]; }
    const Action& action(std::size_t i) const { return actions_[i]; }
    const State& next_state(std::size_t i) const { return next_states_[i]; }

    /// Gather rows by index into batch matrices (one row per transition).
    void gather(const std::vector<int>& idx, Eigen::MatrixXd& states,
                Eigen::MatrixXd& actions, Eigen::MatrixXd& next_states) const;

    /// All (state, action) rows concatenated, for normalizer fitting.
    Eigen::MatrixXd input_matrix() const;

private:
    int state_dim_ = 0;
    int action_dim_ = 0;
    std::vector<State> states_;
    std::vector<Action> actions_;
    std::vector<State> next_states_;
};

}  // namespace riskplan
