#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "riskplan/ensemble.hpp"
#include "riskplan/propagate.hpp"
#include "test_support.hpp"

using namespace riskplan;
using riskplan::testing::LambdaModel;
using riskplan::testing::shift_model;

namespace {
// Effectively noiseless: exp(0.5 * -2000) underflows to exactly zero.
constexpr double kZeroVarLog = -2000.0;
}  // namespace

TEST_CASE("bundle shapes and initial replication") {
    const LambdaModel model = shift_model(2, 2, std::log(0.04));
    Eigen::VectorXd x0(2);
    x0 << 1.5, -0.5;
    const ActionSequence actions = Eigen::MatrixXd::Constant(3, 2, 0.1);
    const ParticleBundle b = propagate(model, x0, actions, 6, Seed{10});

    CHECK(b.horizon() == 3);
    CHECK(b.particle_count() == 6);
    CHECK(b.member_count() == 2);
    CHECK(b.state_dim() == 2);
    REQUIRE(b.particles.size() == 4);
    REQUIRE(b.mean_paths.size() == 4);
    REQUIRE(b.particle_params.size() == 3);
    REQUIRE(b.mean_params.size() == 3);
    for (int r = 0; r < 6; ++r) CHECK(b.particles[0].row(r) == x0.transpose());
    for (int r = 0; r < 2; ++r) CHECK(b.mean_paths[0].row(r) == x0.transpose());
    for (const auto& p : b.particle_params) {
        CHECK(p.mean_delta.rows() == 6);
        CHECK((p.log_var.array() == std::log(0.04)).all());
    }
    for (const auto& p : b.mean_params) CHECK(p.mean_delta.rows() == 2);
}

TEST_CASE("particles split evenly between members at every step") {
    // Members are told apart by a large mean offset; noise is off.
    const LambdaModel model = shift_model(3, 1, kZeroVarLog, 100.0);
    const State x0 = Eigen::VectorXd::Zero(1);
    const ActionSequence actions = Eigen::MatrixXd::Zero(4, 1);
    const ParticleBundle b = propagate(model, x0, actions, 12, Seed{11});

    for (int t = 0; t < 4; ++t) {
        int counts[3] = {0, 0, 0};
        const Eigen::MatrixXd inc =
            b.particles[static_cast<std::size_t>(t) + 1] - b.particles[static_cast<std::size_t>(t)];
        for (int r = 0; r < 12; ++r) {
            const int member = static_cast<int>(std::lround(inc(r, 0) / 100.0));
            REQUIRE(member >= 0);
            REQUIRE(member <= 2);
            CHECK(std::abs(inc(r, 0) - 100.0 * member) < 1e-9);
            ++counts[member];
        }
        CHECK(counts[0] == 4);
        CHECK(counts[1] == 4);
        CHECK(counts[2] == 4);
    }
}

TEST_CASE("assignments vary over steps") {
    const LambdaModel model = shift_model(2, 1, kZeroVarLog, 1.0);
    const State x0 = Eigen::VectorXd::Zero(1);
    const ActionSequence actions = Eigen::MatrixXd::Zero(6, 1);
    const ParticleBundle b = propagate(model, x0, actions, 8, Seed{12});
    // With a fresh permutation per step, some particle must switch member.
    bool switched = false;
    Eigen::MatrixXd prev = b.particles[1] - b.particles[0];
    for (int t = 1; t < 6 && !switched; ++t) {
        const Eigen::MatrixXd inc =
            b.particles[static_cast<std::size_t>(t) + 1] - b.particles[static_cast<std::size_t>(t)];
        switched = (inc - prev).cwiseAbs().maxCoeff() > 0.5;
        prev = inc;
    }
    CHECK(switched);
}

TEST_CASE("sampled particles reproduce the predicted marginal moments") {
    // Identical members: the mixture marginal is N(x + u, 0.04).
    const LambdaModel model = shift_model(3, 1, std::log(0.04));
    const State x0 = Eigen::VectorXd::Constant(1, 0.7);
    const ActionSequence actions = Eigen::MatrixXd::Constant(1, 1, 0.2);
    const int B = 90000;
    const ParticleBundle b = propagate(model, x0, actions, B, Seed{13});

    const Eigen::VectorXd col = b.particles[1].col(0);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    const double mean_se = 0.2 / std::sqrt(static_cast<double>(B));
    const double var_se = 0.04 * std::sqrt(2.0 / (B - 1.0));
    CHECK(std::abs(mean - 0.9) <= 3.0 * mean_se);
    CHECK(std::abs(var - 0.04) <= 3.0 * var_se);
}

TEST_CASE("zero variance collapses particles onto the mean path") {
    const LambdaModel model = shift_model(1, 2, kZeroVarLog);
    Eigen::VectorXd x0(2);
    x0 << 0.3, -0.4;
    ActionSequence actions(3, 2);
    actions << 0.1, 0.0, -0.2, 0.3, 0.05, 0.05;
    const ParticleBundle b = propagate(model, x0, actions, 4, Seed{14});
    for (std::size_t t = 0; t < 4; ++t) {
        for (int r = 0; r < 4; ++r)
            CHECK(b.particles[t].row(r) == b.mean_paths[t].row(0));
    }
    // Mean path integrates the actions exactly.
    CHECK(b.mean_paths[3](0, 0) == doctest::Approx(0.3 - 0.05).epsilon(1e-12));
    CHECK(b.mean_paths[3](0, 1) == doctest::Approx(-0.4 + 0.35).epsilon(1e-12));
}

TEST_CASE("mean mode removes sampling noise entirely") {
    const LambdaModel model = shift_model(2, 1, 0.0, 100.0);  // unit variance heads
    const State x0 = Eigen::VectorXd::Zero(1);
    const ActionSequence actions = Eigen::MatrixXd::Zero(1, 1);
    const ParticleBundle b =
        propagate(model, x0, actions, 8, Seed{15}, PropagationMode::kMean);
    int counts[2] = {0, 0};
    for (int r = 0; r < 8; ++r) {
        const double v = b.particles[1](r, 0);
        REQUIRE((v == 0.0 || v == 100.0));
        ++counts[v == 0.0 ? 0 : 1];
    }
    CHECK(counts[0] == 4);
    CHECK(counts[1] == 4);
}

TEST_CASE("propagation is deterministic per seed") {
    const LambdaModel model = shift_model(2, 2, std::log(0.25));
    Eigen::VectorXd x0(2);
    x0 << 1.0, 2.0;
    const ActionSequence actions = Eigen::MatrixXd::Constant(5, 2, -0.1);
    const ParticleBundle a = propagate(model, x0, actions, 6, Seed{16});
    const ParticleBundle b = propagate(model, x0, actions, 6, Seed{16});
    const ParticleBundle c = propagate(model, x0, actions, 6, Seed{17});
    for (std::size_t t = 0; t < 6; ++t) CHECK(a.particles[t] == b.particles[t]);
    CHECK(a.particles[5] != c.particles[5]);
}

TEST_CASE("batched propagation equals per-candidate child calls") {
    const LambdaModel model = shift_model(2, 1, std::log(0.04), 0.5);
    const State x0 = Eigen::VectorXd::Constant(1, 0.2);
    std::vector<ActionSequence> seqs = {Eigen::MatrixXd::Constant(4, 1, 0.3),
                                        Eigen::MatrixXd::Constant(4, 1, -0.3),
                                        Eigen::MatrixXd::Zero(4, 1)};
    std::vector<bool> failed;
    const std::vector<ParticleBundle> many =
        propagate_many(model, x0, seqs, 6, Seed{18}, PropagationMode::kSample, &failed);
    REQUIRE(many.size() == 3);
    CHECK(failed == std::vector<bool>(3, false));
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const ParticleBundle solo =
            propagate(model, x0, seqs[i], 6, Seed{18}.child(i));
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(many[i].particles[t] == solo.particles[t]);
            CHECK(many[i].mean_paths[t] == solo.mean_paths[t]);
        }
    }
}

TEST_CASE("batched propagation matches solo calls through a real ensemble") {
    EnsembleConfig cfg;
    cfg.state_dim = 2;
    cfg.action_dim = 1;
    cfg.members = 2;
    cfg.hidden_layers = 1;
    cfg.hidden_size = 8;
    const EnsembleModel model(cfg, Seed{19});
    Eigen::VectorXd x0(2);
    x0 << 0.1, -0.2;
    std::vector<ActionSequence> seqs = {Eigen::MatrixXd::Constant(3, 1, 0.4),
                                        Eigen::MatrixXd::Constant(3, 1, -0.4)};
    const std::vector<ParticleBundle> many =
        propagate_many(model, x0, seqs, 4, Seed{20}, PropagationMode::kSample);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const ParticleBundle solo = propagate(model, x0, seqs[i], 4, Seed{20}.child(i));
        for (std::size_t t = 0; t < 4; ++t) {
            CHECK((many[i].particles[t] - solo.particles[t]).cwiseAbs().maxCoeff() <=
                  1e-12);
            CHECK((many[i].mean_paths[t] - solo.mean_paths[t]).cwiseAbs().maxCoeff() <=
                  1e-12);
        }
    }
}

TEST_CASE("diverging candidates are flagged and filled with NaN") {
    // The model blows up for each row whose state magnitude exceeds 4.5
    // (per row: batches mix rows of different candidates).
    const LambdaModel model(
        1, 1, 1, [](int, const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
            GaussianBatch out;
            out.mean_delta = actions;
            for (Eigen::Index r = 0; r < states.rows(); ++r) {
                if (states.row(r).cwiseAbs().maxCoeff() > 4.5)
                    out.mean_delta.row(r).array() =
                        std::numeric_limits<double>::infinity();
            }
            out.log_var = Eigen::MatrixXd::Constant(states.rows(), 1, kZeroVarLog);
            return out;
        });
    const State x0 = Eigen::VectorXd::Zero(1);
    std::vector<ActionSequence> seqs = {Eigen::MatrixXd::Constant(10, 1, 0.1),
                                        Eigen::MatrixXd::Constant(10, 1, 1.0)};
    std::vector<bool> failed;
    const std::vector<ParticleBundle> many =
        propagate_many(model, x0, seqs, 2, Seed{21}, PropagationMode::kSample, &failed);
    REQUIRE(failed.size() == 2);
    CHECK_FALSE(failed[0]);
    CHECK(failed[1]);

    // Healthy candidate is untouched by its neighbor's failure.
    const ParticleBundle solo = propagate(model, x0, seqs[0], 2, Seed{21}.child(0));
    for (std::size_t t = 0; t < 11; ++t) CHECK(many[0].particles[t] == solo.particles[t]);

    // x reaches 5 at t = 5; the first poisoned slice is t = 6.
    CHECK(many[1].particles[5].allFinite());
    CHECK(many[1].particles[6].array().isNaN().all());
    CHECK(many[1].particles[10].array().isNaN().all());
    CHECK(many[1].mean_paths[10].array().isNaN().all());

    CHECK_THROWS_WITH_AS(propagate(model, x0, seqs[1], 2, Seed{21}.child(1)),
                         doctest::Contains("step 6"), NumericError);
}

TEST_CASE("propagation validates its inputs") {
    const LambdaModel model = shift_model(2, 1, 0.0);
    const State x0 = Eigen::VectorXd::Zero(1);
    const ActionSequence ok = Eigen::MatrixXd::Zero(3, 1);

    CHECK_THROWS_AS(propagate(model, x0, Eigen::MatrixXd::Zero(0, 1), 4, Seed{1}),
                    InvalidInputError);
    CHECK_THROWS_AS(propagate(model, x0, ok, 5, Seed{1}), InvalidInputError);  // 5 % 2
    CHECK_THROWS_AS(propagate(model, x0, ok, 0, Seed{1}), InvalidInputError);
    CHECK_THROWS_AS(propagate(model, Eigen::VectorXd::Zero(2), ok, 4, Seed{1}),
                    InvalidInputError);
    CHECK_THROWS_AS(propagate(model, x0, Eigen::MatrixXd::Zero(3, 2), 4, Seed{1}),
                    InvalidInputError);

    Eigen::VectorXd bad = x0;
    bad(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(propagate(model, bad, ok, 4, Seed{1}), InvalidInputError);
    ActionSequence nan_actions = ok;
    nan_actions(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(propagate(model, x0, nan_actions, 4, Seed{1}), InvalidInputError);

    const std::vector<ParticleBundle> none =
        propagate_many(model, x0, {}, 4, Seed{1}, PropagationMode::kSample);
    CHECK(none.empty());
}
