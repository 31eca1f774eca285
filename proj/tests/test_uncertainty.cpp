#include <doctest.h>

#include <cmath>

#include "riskplan/uncertainty.hpp"
#include "test_support.hpp"

using namespace riskplan;
using riskplan::testing::make_bundle;

namespace {
// 0.5 * ln(2 pi e): differential entropy of a unit-variance Gaussian.
constexpr double kUnitEntropy = 1.4189385332046727;
}  // namespace

TEST_CASE("aleatoric variance averages predicted variances over particles") {
    ParticleBundle bundle = make_bundle(1, 2, 1, 1);
    bundle.particle_params[0].log_var(0, 0) = std::log(0.01);
    bundle.particle_params[0].log_var(1, 0) = std::log(0.09);
    const Eigen::MatrixXd v = aleatoric_variance(bundle);
    REQUIRE(v.rows() == 1);
    REQUIRE(v.cols() == 1);
    CHECK(v(0, 0) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("aleatoric penalty sums root variances over steps and dims") {
    ParticleBundle bundle = make_bundle(2, 3, 1, 2);
    for (auto& p : bundle.particle_params)
        p.log_var.setConstant(std::log(0.04));
    // 2 steps * 2 dims * sqrt(0.04) = 0.8, weighted by 1.5.
    CHECK(aleatoric_cost(bundle, 1.5) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(aleatoric_cost(bundle, 0.0) == 0.0);
}

TEST_CASE("aleatoric entropy matches the Gaussian closed form") {
    ParticleBundle bundle = make_bundle(1, 4, 1, 1);
    const Eigen::VectorXd h = aleatoric_entropy(bundle);  // sigma^2 = 1
    REQUIRE(h.size() == 1);
    CHECK(h(0) == doctest::Approx(kUnitEntropy).epsilon(1e-12));

    ParticleBundle two = make_bundle(2, 4, 1, 1);
    CHECK(aleatoric_cost(two, 0.5, AleatoricMeasure::kEntropy) ==
          doctest::Approx(kUnitEntropy).epsilon(1e-12));
}

TEST_CASE("entropy scales by plus one nat per dim per e^2 variance factor") {
    ParticleBundle base = make_bundle(2, 3, 1, 3);
    ParticleBundle wide = make_bundle(2, 3, 1, 3);
    for (auto& p : base.particle_params) p.log_var.setConstant(std::log(0.5));
    for (auto& p : wide.particle_params) p.log_var.setConstant(std::log(0.5) + 2.0);
    const Eigen::VectorXd hb = aleatoric_entropy(base);
    const Eigen::VectorXd hw = aleatoric_entropy(wide);
    for (int t = 0; t < 2; ++t)
        CHECK(hw(t) - hb(t) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("entropy floors vanishing variances before the log") {
    ParticleBundle bundle = make_bundle(1, 2, 1, 1);
    bundle.particle_params[0].log_var.setConstant(-1000.0);
    const Eigen::VectorXd h = aleatoric_entropy(bundle);
    CHECK(std::isfinite(h(0)));
    CHECK(h(0) == doctest::Approx(kUnitEntropy + 0.5 * std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("epistemic variance is member disagreement in means and variances") {
    ParticleBundle bundle = make_bundle(1, 2, 2, 1);
    bundle.mean_paths[1](0, 0) = 0.0;
    bundle.mean_paths[1](1, 0) = 2.0;
    // Population variance of {0, 2} is 1; predicted variances agree.
    const Eigen::MatrixXd e = epistemic_variance(bundle);
    CHECK(e(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // Disagreement in the predicted variances adds on top: popvar{1, 3} = 1.
    bundle.mean_params[0].log_var(0, 0) = std::log(1.0);
    bundle.mean_params[0].log_var(1, 0) = std::log(3.0);
    CHECK(epistemic_variance(bundle)(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("single member ensembles have exactly zero epistemic variance") {
    ParticleBundle bundle = make_bundle(3, 4, 1, 2);
    bundle.mean_paths[1].setConstant(5.0);
    bundle.mean_params[0].log_var.setConstant(2.0);
    const Eigen::MatrixXd e = epistemic_variance(bundle);
    CHECK((e.array() == 0.0).all());
    CHECK(epistemic_cost(bundle, 3.0) == 0.0);
}

TEST_CASE("epistemic bonus is subtracted") {
    ParticleBundle bundle = make_bundle(1, 2, 2, 1);
    bundle.mean_paths[1](0, 0) = 0.0;
    bundle.mean_paths[1](1, 0) = 2.0;
    CHECK(epistemic_cost(bundle, 0.25) == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(epistemic_cost(bundle, 0.0) == 0.0);
}

TEST_CASE("uncertainty weights must be non-negative") {
    ParticleBundle bundle = make_bundle(1, 2, 2, 1);
    CHECK_THROWS_AS(aleatoric_cost(bundle, -0.1), InvalidInputError);
    CHECK_THROWS_AS(epistemic_cost(bundle, -0.1), InvalidInputError);
}

TEST_CASE("uncertainty report has per-step shapes") {
    const ParticleBundle bundle = make_bundle(3, 4, 2, 5);
    const UncertaintyReport report = analyze_uncertainty(bundle);
    CHECK(report.aleatoric.rows() == 3);
    CHECK(report.aleatoric.cols() == 5);
    CHECK(report.epistemic.rows() == 3);
    CHECK(report.epistemic.cols() == 5);
    CHECK(report.entropy.size() == 3);
}

TEST_CASE("costs are monotone in the underlying spread") {
    ParticleBundle calm = make_bundle(2, 3, 2, 2);
    ParticleBundle noisy = make_bundle(2, 3, 2, 2);
    for (auto& p : calm.particle_params) p.log_var.setConstant(std::log(0.01));
    for (auto& p : noisy.particle_params) p.log_var.setConstant(std::log(0.09));
    CHECK(aleatoric_cost(noisy, 1.0) > aleatoric_cost(calm, 1.0));
    CHECK(aleatoric_cost(noisy, 1.0, AleatoricMeasure::kEntropy) >
          aleatoric_cost(calm, 1.0, AleatoricMeasure::kEntropy));

    ParticleBundle agree = make_bundle(1, 2, 2, 1);
    ParticleBundle split = make_bundle(1, 2, 2, 1);
    split.mean_paths[1](0, 0) = -1.0;
    split.mean_paths[1](1, 0) = 1.0;
    CHECK(epistemic_cost(split, 1.0) < epistemic_cost(agree, 1.0));
}
