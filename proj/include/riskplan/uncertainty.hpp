#pragma once

#include "riskplan/propagate.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

/// Which aleatoric statistic enters the planning cost. Variance is the
/// default; entropy is the Gaussian differential entropy of the predicted
/// step distributions and may be negative.
enum class AleatoricMeasure { kVariance, kEntropy };

/// Weights of the non-task cost terms. Aleatoric and epistemic weights must
/// be non-negative; the epistemic term is subtracted (an exploration bonus).
struct CostWeights {
    double aleatoric = 0.0;
    double epistemic = 0.0;
    double safety = 0.0;
};

/// Per-step aleatoric variance, H x d: mean over the B sampled particles of
/// the predicted variance exp(log_var) at each step.
Eigen::MatrixXd aleatoric_variance(const ParticleBundle& bundle);

/// Per-step aleatoric entropy, length H: mean over particles of
/// sum_d 0.5 ln(2 pi e sigma_d^2).
Eigen::VectorXd aleatoric_entropy(const ParticleBundle& bundle);

/// Per-step epistemic variance, H x d: population variance over the K member
/// mean trajectories of the predicted next mean, plus population variance of
/// the predicted variance, both evaluated on each member's own mean path.
/// Exactly zero for K = 1.
Eigen::MatrixXd epistemic_variance(const ParticleBundle& bundle);

/// weight * sum_t sum_d sqrt(Var^a) for the variance measure,
/// weight * sum_t entropy_t for the entropy measure.
double aleatoric_cost(const ParticleBundle& bundle, double weight,
                      AleatoricMeasure measure = AleatoricMeasure::kVariance);

/// -weight * sum_t sum_d sqrt(Var^e). Negative or zero: rewards disagreement.
double epistemic_cost(const ParticleBundle& bundle, double weight);

/// Everything the logs want in one pass.
struct UncertaintyReport {
    Eigen::MatrixXd aleatoric;  // H x d
    Eigen::MatrixXd epistemic;  // H x d
    Eigen::VectorXd entropy;    // H
};

UncertaintyReport analyze_uncertainty(const ParticleBundle& bundle);

}  // namespace riskplan
