#include "riskplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace riskplan {

namespace {

constexpr std::uint64_t kSampleTag = 0x5A3317;  // per-round sampling stream
constexpr std::uint64_t kScoreTag = 0xEC0255;   // per-round evaluation seeds
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd clip_rows(Eigen::MatrixXd seq, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
    for (Eigen::Index c = 0; c < seq.cols(); ++c)
        seq.col(c) = seq.col(c).cwiseMax(lo(c)).cwiseMin(hi(c));
    return seq;
}

struct Candidate {
    ActionSequence seq;
    CostBreakdown breakdown;
    double total = kInf;
    long order = 0;  // global insertion index; ties go to the oldest
};

/// Weighted cost terms of one evaluated bundle. The task term averages the
/// trajectory cost over particles; uncertainty and safety terms follow the
/// config. Returns false if anything comes out non-finite.
bool score_bundle(const ParticleBundle& bundle, const ActionSequence& actions,
                  const TrajectoryCostFn& cost_fn, const PlannerConfig& config,
                  CostBreakdown& out) {
    const int B = bundle.particle_count();
    const int H = bundle.horizon();
    const int d = bundle.state_dim();

    double task = 0.0;
    Eigen::MatrixXd states(H + 1, d);
    Eigen::VectorXd step_costs(H);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t <= H; ++t)
            states.row(t) = bundle.particles[static_cast<std::size_t>(t)].row(b);
        step_costs.setZero();
        cost_fn(states, actions, step_costs);
        task += step_costs.sum();
    }
    out.task = task / B;
    out.aleatoric = aleatoric_cost(bundle, config.weights.aleatoric, config.aleatoric_measure);
    out.epistemic = epistemic_cost(bundle, config.weights.epistemic);
    out.safety = 0.0;
    if (config.weights.safety > 0.0 && config.unsafe_box.any()) {
        out.safety = safety_cost(
            bundle, SafetyConfig{config.unsafe_box, config.safety_delta, config.weights.safety});
    }
    return std::isfinite(out.total());
}

}  // namespace

void PlannerConfig::validate() const {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    };
    check(horizon >= 1, "planner horizon must be >= 1");
    check(num_samples >= 1, "planner num_samples must be >= 1");
    check(elite_size >= 1 && elite_size <= num_samples,
          "planner elite_size must be in [1, num_samples]");
    check(opt_iterations >= 1, "planner opt_iterations must be >= 1");
    check(num_particles >= 1, "planner num_particles must be >= 1");
    check(noise_beta >= 0.0, "planner noise_beta must be nonnegative");
    check(alpha >= 0.0 && alpha < 1.0, "planner alpha must be in [0, 1)");
    check(fraction_elites_reused >= 0.0 && fraction_elites_reused < 1.0,
          "planner fraction_elites_reused must be in [0, 1)");
    check(init_std > 0.0, "planner init_std must be positive");
    check(action_lo.size() >= 1 && action_lo.size() == action_hi.size(),
          "planner action bounds missing or mismatched");
    check(action_lo.allFinite() && action_hi.allFinite(), "non-finite action bounds");
    check((action_lo.array() < action_hi.array()).all(), "action bounds out of order");
    check(weights.aleatoric >= 0.0, "aleatoric weight must be nonnegative");
    check(weights.epistemic >= 0.0, "epistemic weight must be nonnegative");
    check(weights.safety >= 0.0, "safety weight must be nonnegative");
    check(safety_delta >= 0.0 && safety_delta <= 1.0, "safety delta outside [0, 1]");
}

TrajectoryCostFn lift_step_cost(
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> step_cost) {
    return [fn = std::move(step_cost)](const Eigen::MatrixXd& states,
                                       const Eigen::MatrixXd& actions,
                                       Eigen::VectorXd& step_costs) {
        for (Eigen::Index t = 0; t < actions.rows(); ++t)
            step_costs(t) = fn(states.row(t + 1).transpose(), actions.row(t).transpose());
    };
}

ActionSequence shift_sequence(const ActionSequence& seq) {
    require(seq.rows() >= 1, "cannot shift an empty sequence");
    ActionSequence out(seq.rows(), seq.cols());
    out.topRows(seq.rows() - 1) = seq.bottomRows(seq.rows() - 1);
    out.row(seq.rows() - 1) = seq.row(seq.rows() - 1);
    return out;
}

CostBreakdown evaluate_sequence(const DynamicsModel& model, const State& state,
                                const ActionSequence& actions,
                                const TrajectoryCostFn& cost_fn,
                                const PlannerConfig& config, Seed seed) {
    const ParticleBundle bundle =
        propagate(model, state, actions, config.num_particles, seed, PropagationMode::kSample);
    CostBreakdown out;
    if (!score_bundle(bundle, actions, cost_fn, config, out))
        throw NumericError("non-finite sequence cost");
    return out;
}

PlanResult plan_step(const DynamicsModel& model, const State& state,
                     const TrajectoryCostFn& cost_fn, const PlannerConfig& config,
                     PlannerState& planner_state, Seed seed) {
    config.validate();
    require(state.size() == model.state_dim(), "state dimension mismatch");
    require(state.allFinite(), "non-finite state");
    require(config.action_dim() == model.action_dim(), "action dimension mismatch");

    const int H = config.horizon;
    const int m = config.action_dim();
    const Eigen::VectorXd scale = 0.5 * (config.action_hi - config.action_lo);
    const Eigen::MatrixXd std_init =
        (config.init_std * scale).transpose().replicate(H, 1);
    const Eigen::MatrixXd std_floor = 1e-3 * std_init;

    Eigen::MatrixXd mean;
    const bool warm = planner_state.initialized && config.relative_init &&
                      planner_state.mean.rows() == H && planner_state.mean.cols() == m;
    if (warm) {
        mean = planner_state.mean;
    } else {
        mean = clip_rows(Eigen::MatrixXd::Zero(H, m), config.action_lo, config.action_hi);
    }
    Eigen::MatrixXd std = std_init;

    const int n_reuse = static_cast<int>(
        std::floor(config.fraction_elites_reused * config.elite_size));

    ColoredNoiseGenerator noise_gen(H);
    std::vector<Candidate> pool;
    PlanDiagnostics diag;
    long next_order = 0;

    for (int round = 0; round < config.opt_iterations; ++round) {
        std::vector<ActionSequence> seqs;
        seqs.reserve(static_cast<std::size_t>(config.num_samples) + 1 +
                     static_cast<std::size_t>(n_reuse));
        Rng rng(seed.child(kSampleTag).child(static_cast<std::uint64_t>(round)));
        for (int i = 0; i < config.num_samples; ++i) {
            const Eigen::MatrixXd noise = noise_gen.sample(config.noise_beta, m, rng);
            seqs.push_back(clip_rows(mean + noise.cwiseProduct(std), config.action_lo,
                                     config.action_hi));
        }
        if (config.use_mean_actions)
            seqs.push_back(clip_rows(mean, config.action_lo, config.action_hi));
        if (round == 0 && config.keep_previous_elites && config.shift_elites_over_time &&
            planner_state.initialized) {
            const int stored = static_cast<int>(planner_state.stored_elites.size());
            for (int e = 0; e < std::min(n_reuse, stored); ++e) {
                const ActionSequence& prev = planner_state.stored_elites[static_cast<std::size_t>(e)];
                if (prev.rows() == H && prev.cols() == m)
                    seqs.push_back(shift_sequence(prev));
            }
        }

        std::vector<bool> failed;
        const std::vector<ParticleBundle> bundles = propagate_many(
            model, state, seqs, config.num_particles,
            seed.child(kScoreTag).child(static_cast<std::uint64_t>(round)),
            PropagationMode::kSample, &failed);

        double round_sum = 0.0;
        int round_finite = 0;
        std::vector<Candidate> fresh;
        fresh.reserve(seqs.size());
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            Candidate cand;
            cand.seq = std::move(seqs[i]);
            cand.order = next_order++;
            if (!failed[i] && score_bundle(bundles[i], cand.seq, cost_fn, config,
                                           cand.breakdown)) {
                cand.total = cand.breakdown.total();
                round_sum += cand.total;
                ++round_finite;
            } else {
                ++diag.failed_candidates;
                cand.total = kInf;
            }
            fresh.push_back(std::move(cand));
        }

        std::vector<Candidate> merged;
        if (config.keep_previous_elites) merged = pool;
        for (Candidate& c : fresh)
            if (std::isfinite(c.total)) merged.push_back(std::move(c));
        std::sort(merged.begin(), merged.end(), [](const Candidate& a, const Candidate& b) {
            return a.total != b.total ? a.total < b.total : a.order < b.order;
        });
        if (merged.empty())
            throw NumericError("planner failure: all candidate totals non-finite");
        if (static_cast<int>(merged.size()) > config.elite_size)
            merged.resize(static_cast<std::size_t>(config.elite_size));
        pool = std::move(merged);

        diag.best_total_per_round.push_back(pool.front().total);
        diag.mean_total_per_round.push_back(
            round_finite > 0 ? round_sum / round_finite
                             : std::numeric_limits<double>::quiet_NaN());

        // Momentum refit from the elite pool, per time step and action dim.
        Eigen::MatrixXd elite_mean = Eigen::MatrixXd::Zero(H, m);
        for (const Candidate& c : pool) elite_mean += c.seq;
        elite_mean /= static_cast<double>(pool.size());
        Eigen::MatrixXd elite_var = Eigen::MatrixXd::Zero(H, m);
        for (const Candidate& c : pool)
            elite_var += (c.seq - elite_mean).array().square().matrix();
        elite_var /= static_cast<double>(pool.size());

        mean = (1.0 - config.alpha) * elite_mean + config.alpha * mean;
        std = ((1.0 - config.alpha) * elite_var.array().sqrt() + config.alpha * std.array())
                  .matrix();
        std = std.cwiseMax(std_floor);
    }

    PlanResult result;
    if (config.execute_best_elite) {
        result.chosen = pool.front().seq;
        diag.executed = pool.front().breakdown;
    } else {
        result.chosen = clip_rows(mean, config.action_lo, config.action_hi);
        diag.executed = evaluate_sequence(
            model, state, result.chosen, cost_fn, config,
            seed.child(kScoreTag).child(static_cast<std::uint64_t>(config.opt_iterations)));
    }
    result.action = result.chosen.row(0).transpose();
    result.diagnostics = std::move(diag);

    planner_state.mean = shift_sequence(mean);
    planner_state.stored_elites.clear();
    for (const Candidate& c : pool) planner_state.stored_elites.push_back(c.seq);
    planner_state.initialized = true;
    return result;
}

}  // namespace riskplan
