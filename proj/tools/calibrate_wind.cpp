// Reproduces the wind-force calibration behind maze::kWindMaxForce: for each
// candidate maximum force, run the risk-neutral receding-horizon planner on
// the middle crossing and report its closed-loop success rate. Replanning
// corrects drift every step, so the closed loop tolerates far more wind than
// an open-loop crossing; the constant is chosen so the risk-neutral rate
// lands near one half, leaving room for a risk-averse agent to beat it by
// taking the calm detour bridges.
#include <cstdio>
#include <cstdlib>
#include <memory>

#include "riskplan/env.hpp"
#include "riskplan/ground_truth.hpp"
#include "riskplan/harness.hpp"

using namespace riskplan;

int main(int argc, char** argv) {
    const int episodes = argc > 1 ? std::atoi(argv[1]) : 20;
    std::printf("%10s %12s %10s %10s\n", "max_force", "success", "fall", "timeout");
    for (double force = 4.0; force <= 12.01; force += 2.0) {
        EnvNoiseConfig noise;
        noise.wind.max_force = force;
        auto plan_env = std::shared_ptr<const Environment>(make_environment("bridge_maze", noise));
        const GroundTruthEnsemble model(plan_env, 2);
        auto env = make_environment("bridge_maze", noise);

        PlannerConfig cfg;
        cfg.horizon = 25;
        cfg.num_samples = 48;
        cfg.num_particles = 8;
        cfg.elite_size = 10;
        cfg.opt_iterations = 3;
        cfg.action_lo = env->action_lo();
        cfg.action_hi = env->action_hi();

        int success = 0, falls = 0;
        for (int ep = 0; ep < episodes; ++ep) {
            const EpisodeLog log = run_episode(*env, model, cfg, 80,
                                               Seed{0xCA11B0}.child(static_cast<std::uint64_t>(ep)));
            success += log.success ? 1 : 0;
            falls += (!log.violations.empty() && log.violations.back() == 1) ? 1 : 0;
        }
        std::printf("%10.2f %12.4f %10.4f %10.4f\n", force,
                    static_cast<double>(success) / episodes,
                    static_cast<double>(falls) / episodes,
                    static_cast<double>(episodes - success - falls) / episodes);
    }
    return 0;
}
