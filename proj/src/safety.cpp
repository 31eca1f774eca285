#include "riskplan/safety.hpp"

#include <cmath>

namespace riskplan {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

SliceGaussian moment_match(const Eigen::MatrixXd& particles) {
    const Eigen::Index B = particles.rows();
    require(B >= 2, "moment matching needs at least 2 particles");
    SliceGaussian g;
    g.mean = particles.colwise().mean();
    const Eigen::MatrixXd centered = particles.rowwise() - g.mean.transpose();
    g.std = (centered.array().square().colwise().sum() / static_cast<double>(B - 1))
                .sqrt()
                .matrix()
                .transpose();
    g.std = g.std.cwiseMax(kSafetyStdFloor);
    return g;
}

double violation_probability(const SliceGaussian& slice, const BoxConstraint& box) {
    require(box.any(), "box constraint has no constrained dimension");
    require(static_cast<Eigen::Index>(box.dims.size()) == slice.mean.size(),
            "box/slice dimension mismatch");

    // Per-dim interval masses; switch to log space if any mass underflows.
    double product = 1.0;
    double log_sum = 0.0;
    bool use_log = false;
    for (std::size_t i = 0; i < box.dims.size(); ++i) {
        if (!box.dims[i]) continue;  // unconstrained: factor 1
        const Interval& iv = *box.dims[i];
        require(iv.lo < iv.hi, "box interval out of order");
        const double mu = slice.mean(static_cast<Eigen::Index>(i));
        const double sigma = slice.std(static_cast<Eigen::Index>(i));
        const double mass = std::max(0.0, standard_normal_cdf((iv.hi - mu) / sigma) -
                                              standard_normal_cdf((iv.lo - mu) / sigma));
        if (mass == 0.0) return 0.0;
        product *= mass;
        log_sum += std::log(mass);
        if (mass < 1e-300 || product < 1e-300) use_log = true;
    }
    const double p = use_log ? std::exp(log_sum) : product;
    return std::min(1.0, std::max(0.0, p));
}

Eigen::VectorXd violation_probabilities(const ParticleBundle& bundle,
                                        const BoxConstraint& box) {
    const int H = bundle.horizon();
    Eigen::VectorXd out(H);
    for (int t = 0; t < H; ++t) {
        out(t) = violation_probability(
            moment_match(bundle.particles[static_cast<std::size_t>(t) + 1]), box);
    }
    return out;
}

double safety_cost(const ParticleBundle& bundle, const SafetyConfig& config) {
    require(config.delta >= 0.0 && config.delta <= 1.0, "delta outside [0, 1]");
    require(config.weight >= 0.0, "negative safety weight");
    if (config.weight == 0.0 || !config.unsafe_box.any()) return 0.0;
    const Eigen::VectorXd p = violation_probabilities(bundle, config.unsafe_box);
    int count = 0;
    for (Eigen::Index t = 0; t < p.size(); ++t)
        if (p(t) > config.delta) ++count;
    return config.weight * count;
}

}  // namespace riskplan
