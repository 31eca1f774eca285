#include "riskplan/normalizer.hpp"

#include "riskplan/types.hpp"

namespace riskplan {

void InputNormalizer::fit(const Eigen::MatrixXd& rows) {
    require(rows.rows() > 0, "normalizer fit on empty data");
    mean_ = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mean_.transpose();
    std_ = (centered.array().square().colwise().mean()).sqrt().matrix();
    std_ = std_.cwiseMax(kStdFloor);
}

}  // namespace riskplan
