#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace riskplan {

/// Observation vector of an environment, dimension d.
using State = Eigen::VectorXd;
/// Control input, dimension m. Entries live in the environment action bounds
/// after clipping.
using Action = Eigen::VectorXd;
/// Open-loop plan: one action per row, H rows.
using ActionSequence = Eigen::MatrixXd;

/// Precondition violations (bad dimensions, empty batches, invalid ranges).
struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values produced by model evaluation or training.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed configuration files or unknown keys.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One stochastic one-step prediction: the next state is
/// state + mean_delta with independent per-dimension variance exp(log_var).
struct GaussianParams {
    Eigen::VectorXd mean_delta;
    Eigen::VectorXd log_var;
};

/// Batched Gaussian parameters, one sample per row.
struct GaussianBatch {
    Eigen::MatrixXd mean_delta;
    Eigen::MatrixXd log_var;

    GaussianParams row(Eigen::Index i) const {
        return {mean_delta.row(i).transpose(), log_var.row(i).transpose()};
    }
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInputError(msg);
}

}  // namespace riskplan
