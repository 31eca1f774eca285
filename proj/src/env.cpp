#include "riskplan/env.hpp"

#include <cmath>

#include "riskplan/bridge_maze.hpp"
#include "riskplan/noisy_integrator.hpp"

namespace riskplan {

void EnvNoiseConfig::validate() const {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    };
    check(std::isfinite(wind.max_force) && wind.max_force >= 0.0,
          "wind max_force must be finite and nonnegative");
    check(wind.resample_period >= 1, "wind resample_period must be >= 1");
    check(wind.x0_lo < wind.x0_hi && wind.x1_lo < wind.x1_hi,
          "wind region bounds out of order");
    check(std::isfinite(action_noise.velocity_gate), "non-finite velocity gate");
    check(std::isfinite(action_noise.variance) && action_noise.variance >= 0.0,
          "action noise variance must be finite and nonnegative");
}

std::unique_ptr<Environment> make_environment(const std::string& id,
                                              const EnvNoiseConfig& noise) {
    noise.validate();
    if (id == "bridge_maze") return std::make_unique<BridgeMaze>(noise);
    if (id == "noisy_integrator") return std::make_unique<NoisyIntegrator>(noise);
    throw ConfigError("unknown environment id: " + id);
}

double coverage(const std::vector<State>& visited) {
    constexpr int kBins = 50;
    constexpr double kX0Lo = -20.0, kX0Hi = 20.0;
    constexpr double kX1Lo = -10.0, kX1Hi = 15.0;
    auto bin = [](double x, double lo, double hi) {
        const int i = static_cast<int>(std::floor((x - lo) / (hi - lo) * kBins));
        return std::min(std::max(i, 0), kBins - 1);
    };
    std::vector<bool> occupied(static_cast<std::size_t>(kBins) * kBins, false);
    for (const State& s : visited) {
        require(s.size() >= 2, "coverage needs at least two state dims");
        occupied[static_cast<std::size_t>(bin(s(0), kX0Lo, kX0Hi)) * kBins +
                 static_cast<std::size_t>(bin(s(1), kX1Lo, kX1Hi))] = true;
    }
    std::size_t count = 0;
    for (bool b : occupied) count += b ? 1 : 0;
    return static_cast<double>(count) / (static_cast<double>(kBins) * kBins);
}

}  // namespace riskplan
