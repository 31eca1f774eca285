#include "riskplan/uncertainty.hpp"

#include <cmath>

namespace riskplan {

namespace {
constexpr double kTwoPiE = 17.079468445347132;  // 2 * pi * e
constexpr double kVarFloor = 1e-12;             // before the entropy log
}  // namespace

Eigen::MatrixXd aleatoric_variance(const ParticleBundle& bundle) {
    const int H = bundle.horizon();
    const int d = bundle.state_dim();
    Eigen::MatrixXd out(H, d);
    for (int t = 0; t < H; ++t) {
        out.row(t) = bundle.particle_params[static_cast<std::size_t>(t)]
                         .log_var.array()
                         .exp()
                         .colwise()
                         .mean();
    }
    return out;
}

Eigen::VectorXd aleatoric_entropy(const ParticleBundle& bundle) {
    const int H = bundle.horizon();
    Eigen::VectorXd out(H);
    for (int t = 0; t < H; ++t) {
        const Eigen::ArrayXXd var = bundle.particle_params[static_cast<std::size_t>(t)]
                                        .log_var.array()
                                        .exp()
                                        .max(kVarFloor);
        out(t) = (0.5 * (kTwoPiE * var).log()).rowwise().sum().mean();
    }
    return out;
}

Eigen::MatrixXd epistemic_variance(const ParticleBundle& bundle) {
    const int H = bundle.horizon();
    const int d = bundle.state_dim();
    const int K = bundle.member_count();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(H, d);
    if (K <= 1) return out;  // disagreement undefined for a single member

    for (int t = 0; t < H; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        // Predicted next means along each member's own mean path.
        const Eigen::MatrixXd& next_means = bundle.mean_paths[ut + 1];
        const Eigen::MatrixXd vars = bundle.mean_params[ut].log_var.array().exp();
        const Eigen::RowVectorXd mean_of_means = next_means.colwise().mean();
        const Eigen::RowVectorXd mean_of_vars = vars.colwise().mean();
        out.row(t) =
            (next_means.rowwise() - mean_of_means).array().square().colwise().mean() +
            (vars.rowwise() - mean_of_vars).array().square().colwise().mean();
    }
    return out;
}

double aleatoric_cost(const ParticleBundle& bundle, double weight,
                      AleatoricMeasure measure) {
    require(weight >= 0.0, "negative aleatoric weight");
    if (weight == 0.0) return 0.0;
    if (measure == AleatoricMeasure::kVariance)
        return weight * aleatoric_variance(bundle).array().sqrt().sum();
    return weight * aleatoric_entropy(bundle).sum();
}

double epistemic_cost(const ParticleBundle& bundle, double weight) {
    require(weight >= 0.0, "negative epistemic weight");
    if (weight == 0.0) return 0.0;
    return -weight * epistemic_variance(bundle).array().sqrt().sum();
}

UncertaintyReport analyze_uncertainty(const ParticleBundle& bundle) {
    return {aleatoric_variance(bundle), epistemic_variance(bundle),
            aleatoric_entropy(bundle)};
}

}  // namespace riskplan
