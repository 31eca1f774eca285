#pragma once

#include <vector>

#include "riskplan/model.hpp"
#include "riskplan/rng.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

enum class PropagationMode { kSample, kMean };

/// Forward rollout of one action sequence through an ensemble:
///   - B sampled particles mixed between members at every step (TS1),
///   - K member-mean trajectories, each propagated auto-regressively
///     through its own member.
/// Index 0 of both state arrays is the replicated initial state. The Gaussian
/// parameters behind every particle step and every mean step are recorded for
/// the uncertainty and safety computations downstream.
struct ParticleBundle {
    std::vector<Eigen::MatrixXd> particles;   // H+1 entries, each B x d
    std::vector<Eigen::MatrixXd> mean_paths;  // H+1 entries, each K x d
    std::vector<GaussianBatch> particle_params;  // H entries, rows = B
    std::vector<GaussianBatch> mean_params;      // H entries, rows = K

    int horizon() const { return static_cast<int>(particle_params.size()); }
    int particle_count() const {
        return particles.empty() ? 0 : static_cast<int>(particles[0].rows());
    }
    int member_count() const {
        return mean_paths.empty() ? 0 : static_cast<int>(mean_paths[0].rows());
    }
    int state_dim() const {
        return particles.empty() ? 0 : static_cast<int>(particles[0].cols());
    }
};

/// TS1 propagation. Particles are re-assigned uniformly to members at each
/// step (an even-split random permutation; B must be divisible by K). In
/// kSample mode each particle draws one standard normal per dimension per
/// step; draws are addressed by (seed, step, particle, dim) so the bundle is
/// bitwise reproducible and independent of evaluation order. kMean sets each
/// particle to its member's predicted mean instead.
///
/// Throws InvalidInputError for horizon 0 or invalid B, NumericError naming
/// the step index if a propagated state goes non-finite.
ParticleBundle propagate(const DynamicsModel& model, const State& initial,
                         const ActionSequence& actions, int num_particles, Seed seed,
                         PropagationMode mode = PropagationMode::kSample);

/// Batched variant evaluating many candidate sequences from one initial
/// state. Candidate i uses seed.child(i), so results are identical to
/// calling propagate(per-candidate child seed) once per sequence; member
/// evaluations are batched across candidates. Instead of throwing on
/// non-finite states, the affected candidate is flagged in `failed` (sized
/// and filled by the call) and its remaining steps hold NaNs.
std::vector<ParticleBundle> propagate_many(const DynamicsModel& model,
                                           const State& initial,
                                           const std::vector<ActionSequence>& actions,
                                           int num_particles, Seed seed,
                                           PropagationMode mode,
                                           std::vector<bool>* failed = nullptr);

}  // namespace riskplan
