#include "riskplan/propagate.hpp"

#include <cmath>
#include <limits>

namespace riskplan {

namespace {

// Stream tags separating the assignment and sampling randomness of one
// candidate; values are arbitrary but frozen (reseeding would change every
// pinned test oracle downstream).
constexpr std::uint64_t kAssignTag = 0xA55160;
constexpr std::uint64_t kNoiseTag = 0x401532;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<ParticleBundle> propagate_seeded(const DynamicsModel& model,
                                             const State& initial,
                                             const std::vector<ActionSequence>& actions,
                                             int B, const std::vector<Seed>& seeds,
                                             PropagationMode mode,
                                             std::vector<bool>* failed) {
    const int K = model.member_count();
    const int d = model.state_dim();
    const int m = model.action_dim();
    require(initial.size() == d, "initial state dimension mismatch");
    require(initial.allFinite(), "non-finite initial state");
    require(B >= K && B % K == 0, "particle count must be a positive multiple of K");
    const std::size_t N = actions.size();
    if (failed) failed->assign(N, false);
    if (N == 0) return {};

    const auto H = actions[0].rows();
    require(H >= 1, "horizon 0");
    for (const ActionSequence& seq : actions) {
        require(seq.rows() == H && seq.cols() == m, "action sequence shape mismatch");
        require(seq.allFinite(), "non-finite action sequence");
    }
    const int per_member = B / K;

    std::vector<ParticleBundle> bundles(N);
    std::vector<bool> alive(N, true);
    for (std::size_t i = 0; i < N; ++i) {
        ParticleBundle& b = bundles[i];
        b.particles.assign(static_cast<std::size_t>(H) + 1,
                           initial.transpose().replicate(B, 1));
        b.mean_paths.assign(static_cast<std::size_t>(H) + 1,
                            initial.transpose().replicate(K, 1));
        b.particle_params.assign(static_cast<std::size_t>(H),
                                 {Eigen::MatrixXd::Constant(B, d, kNaN),
                                  Eigen::MatrixXd::Constant(B, d, kNaN)});
        b.mean_params.assign(static_cast<std::size_t>(H),
                             {Eigen::MatrixXd::Constant(K, d, kNaN),
                              Eigen::MatrixXd::Constant(K, d, kNaN)});
    }

    std::vector<std::vector<int>> member_of(N, std::vector<int>(B));

    for (Eigen::Index t = 0; t < H; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        bool any_alive = false;
        for (std::size_t i = 0; i < N; ++i) {
            if (!alive[i]) continue;
            any_alive = true;
            Rng assign_rng(seeds[i].child(kAssignTag).child(static_cast<std::uint64_t>(t)));
            const std::vector<int> perm = assign_rng.permutation(B);
            for (int b = 0; b < B; ++b) member_of[i][b] = perm[static_cast<std::size_t>(b)] / per_member;
        }
        if (!any_alive) break;

        for (int k = 0; k < K; ++k) {
            // Rows: per alive candidate, its particles assigned to member k
            // (in particle order), then that candidate's mean-path row.
            Eigen::Index rows = 0;
            for (std::size_t i = 0; i < N; ++i)
                if (alive[i]) rows += per_member + 1;
            Eigen::MatrixXd batch_states(rows, d);
            Eigen::MatrixXd batch_actions(rows, m);
            Eigen::Index at = 0;
            for (std::size_t i = 0; i < N; ++i) {
                if (!alive[i]) continue;
                const Eigen::MatrixXd& cur = bundles[i].particles[ut];
                for (int b = 0; b < B; ++b) {
                    if (member_of[i][b] != k) continue;
                    batch_states.row(at) = cur.row(b);
                    batch_actions.row(at) = actions[i].row(t);
                    ++at;
                }
                batch_states.row(at) = bundles[i].mean_paths[ut].row(k);
                batch_actions.row(at) = actions[i].row(t);
                ++at;
            }

            const GaussianBatch out = model.forward_batch(k, batch_states, batch_actions);

            at = 0;
            for (std::size_t i = 0; i < N; ++i) {
                if (!alive[i]) continue;
                ParticleBundle& bundle = bundles[i];
                for (int b = 0; b < B; ++b) {
                    if (member_of[i][b] != k) continue;
                    bundle.particle_params[ut].mean_delta.row(b) = out.mean_delta.row(at);
                    bundle.particle_params[ut].log_var.row(b) = out.log_var.row(at);
                    ++at;
                }
                bundle.mean_params[ut].mean_delta.row(k) = out.mean_delta.row(at);
                bundle.mean_params[ut].log_var.row(k) = out.log_var.row(at);
                bundle.mean_paths[ut + 1].row(k) =
                    bundle.mean_paths[ut].row(k) + out.mean_delta.row(at);
                ++at;
            }
        }

        for (std::size_t i = 0; i < N; ++i) {
            if (!alive[i]) continue;
            ParticleBundle& bundle = bundles[i];
            const std::uint64_t noise_key = seeds[i].child(kNoiseTag).value;
            Eigen::MatrixXd& next = bundle.particles[ut + 1];
            next = bundle.particles[ut] + bundle.particle_params[ut].mean_delta;
            if (mode == PropagationMode::kSample) {
                for (int b = 0; b < B; ++b) {
                    for (int dim = 0; dim < d; ++dim) {
                        const std::uint64_t ctr =
                            (static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(B) +
                             static_cast<std::uint64_t>(b)) *
                                static_cast<std::uint64_t>(d) +
                            static_cast<std::uint64_t>(dim);
                        next(b, dim) += std::exp(0.5 * bundle.particle_params[ut].log_var(b, dim)) *
                                        counter_normal(noise_key, ctr);
                    }
                }
            }
            if (!next.allFinite() || !bundle.mean_paths[ut + 1].allFinite()) {
                alive[i] = false;
                if (failed) (*failed)[i] = true;
                for (Eigen::Index t2 = t + 1; t2 <= H; ++t2) {
                    bundle.particles[static_cast<std::size_t>(t2)].setConstant(kNaN);
                    bundle.mean_paths[static_cast<std::size_t>(t2)].setConstant(kNaN);
                }
            }
        }
    }
    return bundles;
}

}  // namespace

ParticleBundle propagate(const DynamicsModel& model, const State& initial,
                         const ActionSequence& actions, int num_particles, Seed seed,
                         PropagationMode mode) {
    std::vector<bool> failed;
    std::vector<ParticleBundle> bundles = propagate_seeded(
        model, initial, {actions}, num_particles, {seed}, mode, &failed);
    ParticleBundle& bundle = bundles[0];
    if (failed[0]) {
        Eigen::Index step = 0;
        for (Eigen::Index t = 1; t < static_cast<Eigen::Index>(bundle.particles.size()); ++t) {
            if (!bundle.particles[static_cast<std::size_t>(t)].allFinite() ||
                !bundle.mean_paths[static_cast<std::size_t>(t)].allFinite()) {
                step = t;
                break;
            }
        }
        throw NumericError("non-finite propagated state at step " + std::to_string(step));
    }
    return std::move(bundle);
}

std::vector<ParticleBundle> propagate_many(const DynamicsModel& model,
                                           const State& initial,
                                           const std::vector<ActionSequence>& actions,
                                           int num_particles, Seed seed,
                                           PropagationMode mode,
                                           std::vector<bool>* failed) {
    std::vector<Seed> seeds;
    seeds.reserve(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i)
        seeds.push_back(seed.child(static_cast<std::uint64_t>(i)));
    return propagate_seeded(model, initial, actions, num_particles, seeds, mode, failed);
}

}  // namespace riskplan
