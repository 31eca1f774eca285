#pragma once

#include <Eigen/Core>

namespace riskplan {

/// Z-score normalizer for network inputs. Fit uses full-dataset moments
/// (population std, floored at 1e-8); before the first fit it is the identity.
class InputNormalizer {
public:
    InputNormalizer() = default;
    explicit InputNormalizer(int dim)
        : mean_(Eigen::VectorXd::Zero(dim)), std_(Eigen::VectorXd::Ones(dim)) {}

    static constexpr double kStdFloor = 1e-8;

    void fit(const Eigen::MatrixXd& rows);

    Eigen::MatrixXd normalize(const Eigen::MatrixXd& rows) const {
        return (rows.rowwise() - mean_.transpose()).array().rowwise() /
               std_.transpose().array();
    }

    int dim() const { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& stddev() const { return std_; }
    void set_moments(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev) {
        mean_ = mean;
        std_ = stddev;
    }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd std_;
};

}  // namespace riskplan
