#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace riskplan {

namespace detail {
// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Hierarchically splittable seed. child(k) derives an independent stream;
/// derivations commute with nothing, so adding work units never perturbs
/// existing ones (experiment -> iteration -> episode -> planner step).
struct Seed {
    std::uint64_t value = 0;

    Seed child(std::uint64_t k) const {
        return Seed{detail::mix64(value ^ detail::mix64(k + 0x517cc1b727220a95ULL))};
    }
};

/// Uniform in (0,1), reproducible from (key, counter) alone. Used where draws
/// must be addressable by index, e.g. one draw per (step, particle, dim).
inline double counter_uniform(std::uint64_t key, std::uint64_t counter) {
    const std::uint64_t bits = detail::mix64(key ^ detail::mix64(counter + 1));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw addressed by (key, counter), via Box-Muller on two
/// counter uniforms.
inline double counter_normal(std::uint64_t key, std::uint64_t counter) {
    const double u1 = counter_uniform(key, 2 * counter);
    const double u2 = counter_uniform(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Stateful generator for sequential draws (shuffles, environment noise).
/// All distributions are implemented directly on the raw bit stream so the
/// draw sequence is pinned by this code, not the standard library.
class Rng {
public:
    explicit Rng(Seed seed) : gen_(detail::mix64(seed.value ^ 0xda3e39cb94b95bdbULL)) {}

    double uniform() {  // (0,1)
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n).
    int below(int n) {
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

    bool coin() { return (gen_() & 1ULL) != 0; }

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        for (int i = n - 1; i > 0; --i) std::swap(p[i], p[below(i + 1)]);
        return p;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace riskplan
