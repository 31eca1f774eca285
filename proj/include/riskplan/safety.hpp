#pragma once

#include <optional>
#include <vector>

#include "riskplan/propagate.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Axis-aligned box marking the unsafe region. Dimensions left unset are
/// unconstrained (interval mass 1 for them, so they never shrink the
/// violation probability).
struct BoxConstraint {
    std::vector<std::optional<Interval>> dims;

    bool any() const {
        for (const auto& d : dims)
            if (d) return true;
        return false;
    }
};

struct SafetyConfig {
    BoxConstraint unsafe_box;
    double delta = 0.0;   // threshold on the per-step violation probability
    double weight = 0.0;  // either 0 (off) or the task cost ceiling
};

/// Diagonal Gaussian fitted to one time slice of particles.
struct SliceGaussian {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  // Bessel-corrected, floored at kSafetyStdFloor
};

inline constexpr double kSafetyStdFloor = 1e-6;

double standard_normal_cdf(double z);

/// Fits mean and Bessel-corrected std per dimension to B >= 2 particle rows.
SliceGaussian moment_match(const Eigen::MatrixXd& particles);

/// Probability mass the fitted Gaussian puts inside the unsafe box:
/// product over constrained dims of Phi((hi-mu)/sigma) - Phi((lo-mu)/sigma).
/// Accumulated in log space when any per-dim mass drops below 1e-300.
double violation_probability(const SliceGaussian& slice, const BoxConstraint& box);

/// Per-step violation probabilities for the predicted slices 1..H.
Eigen::VectorXd violation_probabilities(const ParticleBundle& bundle,
                                        const BoxConstraint& box);

/// weight * #{t : p_t > delta}, strict inequality.
double safety_cost(const ParticleBundle& bundle, const SafetyConfig& config);

}  // namespace riskplan
