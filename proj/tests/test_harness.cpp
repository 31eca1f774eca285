#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskplan/cli.hpp"
#include "riskplan/csv.hpp"
#include "riskplan/ground_truth.hpp"
#include "riskplan/harness.hpp"
#include "riskplan/noisy_integrator.hpp"

using namespace riskplan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "riskplan_harness_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json tiny_training_json(const std::string& env_id, const fs::path& out) {
    json j;
    j["environment"] = env_id;
    j["model"] = {{"type", "ground_truth"}, {"members", 2}};
    j["planner"] = {{"horizon", 4}, {"num_samples", 8},   {"num_particles", 2},
                    {"elite_size", 3}, {"opt_iterations", 2}};
    j["schedule"] = {{"rollouts_per_iter", 2},
                     {"rollout_length", 8},
                     {"fit_epochs", 2},
                     {"iterations", 2}};
    j["evaluation"] = {{"episodes", 3}, {"rollout_length", 6}};
    j["seed"] = 31337;
    j["output_dir"] = out.string();
    return j;
}

int column_index(const CsvTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return static_cast<int>(i);
    return -1;
}

/// Timing columns are the one legitimately nondeterministic part of a run.
CsvTable drop_column(const CsvTable& t, const std::string& name) {
    const int idx = column_index(t, name);
    REQUIRE(idx >= 0);
    CsvTable out;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (static_cast<int>(i) != idx) out.columns.push_back(t.columns[i]);
    for (const auto& row : t.rows) {
        std::vector<std::string> r;
        for (std::size_t i = 0; i < row.size(); ++i)
            if (static_cast<int>(i) != idx) r.push_back(row[i]);
        out.rows.push_back(std::move(r));
    }
    return out;
}

json read_json_file(const fs::path& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    return json::parse(is);
}

/// Trains the tiny two-member ensemble on the integrator and returns the
/// checkpoint path; used by every test that needs a real checkpoint.
fs::path make_checkpoint(const fs::path& out) {
    json j = tiny_training_json("noisy_integrator", out);
    j["model"] = {{"type", "ensemble"},
                  {"members", 2},
                  {"hidden_layers", 1},
                  {"hidden_size", 8},
                  {"fit", {{"learning_rate", 0.003}, {"batch_size", 16}}}};
    j["schedule"] = {{"rollouts_per_iter", 2},
                     {"rollout_length", 10},
                     {"fit_epochs", 3},
                     {"iterations", 1}};
    j["seed"] = 77;
    const RunOutcome outcome = run_training(parse_experiment_config(j));
    REQUIRE(outcome.exit_code == 0);
    REQUIRE(fs::exists(out / "model.ckpt"));
    return out / "model.ckpt";
}

PlannerConfig tiny_planner(const Environment& env) {
    PlannerConfig planner;
    planner.horizon = 3;
    planner.num_samples = 8;
    planner.num_particles = 2;
    planner.elite_size = 3;
    planner.opt_iterations = 2;
    planner.action_lo = env.action_lo();
    planner.action_hi = env.action_hi();
    return planner;
}

}  // namespace

TEST_CASE("closed-loop episodes replay bitwise per seed") {
    NoisyIntegrator env;
    const GroundTruthEnsemble model(std::make_shared<NoisyIntegrator>(), 2);
    const PlannerConfig planner = tiny_planner(env);

    const EpisodeLog a = run_episode(env, model, planner, 5, Seed{9});
    const EpisodeLog b = run_episode(env, model, planner, 5, Seed{9});
    REQUIRE(a.states.size() == 6);
    REQUIRE(a.actions.size() == 5);
    REQUIRE(a.rewards.size() == 5);
    REQUIRE(a.violations.size() == 5);
    REQUIRE(a.plan_costs.size() == 5);
    for (std::size_t t = 0; t < a.actions.size(); ++t) {
        CHECK(a.states[t + 1] == b.states[t + 1]);
        CHECK(a.actions[t] == b.actions[t]);
        CHECK(a.rewards[t] == b.rewards[t]);
    }
    double reward_sum = 0.0;
    for (double r : a.rewards) reward_sum += r;
    CHECK(a.total_reward == doctest::Approx(reward_sum).epsilon(1e-12));
    CHECK_FALSE(a.success);  // the integrator never terminates
    CHECK(a.mean_plan_seconds > 0.0);

    const EpisodeLog c = run_episode(env, model, planner, 5, Seed{10});
    CHECK(a.states.back() != c.states.back());
}

TEST_CASE("ground-truth training writes a complete, reproducible artifact set") {
    const fs::path out_a = fresh_dir("train_gt_a");
    const ExperimentConfig cfg =
        parse_experiment_config(tiny_training_json("bridge_maze", out_a));
    const RunOutcome outcome = run_training(cfg);
    CHECK(outcome.exit_code == 0);

    REQUIRE(fs::exists(out_a / "run.csv"));
    REQUIRE(fs::exists(out_a / "summary.json"));
    REQUIRE(fs::exists(out_a / "config.json"));
    CHECK_FALSE(fs::exists(out_a / "model.ckpt"));  // nothing to fit
    for (int iter = 0; iter < 2; ++iter)
        for (int ep = 0; ep < 2; ++ep)
            CHECK(fs::exists(out_a / "episodes" /
                             ("iter_" + std::to_string(iter) + "_ep_" +
                              std::to_string(ep) + ".csv")));

    const CsvTable run = read_csv(out_a / "run.csv");
    REQUIRE(run.rows.size() == 4);  // 2 iterations x 2 episodes
    const int steps_col = column_index(run, "steps");
    const int size_col = column_index(run, "dataset_size");
    const int loss_col = column_index(run, "loss_member_0");
    REQUIRE(steps_col >= 0);
    REQUIRE(size_col >= 0);
    REQUIRE(loss_col >= 0);
    long total_steps = 0;
    for (const auto& row : run.rows) {
        total_steps += std::stol(row[static_cast<std::size_t>(steps_col)]);
        CHECK(row[static_cast<std::size_t>(loss_col)] == "nan");  // no ensemble
    }
    CHECK(std::stol(run.rows.back()[static_cast<std::size_t>(size_col)]) == total_steps);

    const json summary = read_json_file(out_a / "summary.json");
    CHECK(summary.at("status") == "ok");
    CHECK(summary.at("iterations_completed") == 2);
    CHECK(summary.at("dataset_size").get<long>() == total_steps);
    CHECK(summary.at("coverage").get<double>() > 0.0);
    CHECK(summary.at("config_hash") == config_hash_hex(cfg));

    // The per-episode logs replay through the cost columns consistently.
    const CsvTable ep0 = read_csv(out_a / "episodes" / "iter_0_ep_0.csv");
    CHECK(static_cast<long>(ep0.rows.size()) ==
          std::stol(run.rows[0][static_cast<std::size_t>(steps_col)]));

    // An identical config pointed at a fresh directory reproduces everything
    // except wall-clock timings.
    const fs::path out_b = fresh_dir("train_gt_b");
    json j_b = tiny_training_json("bridge_maze", out_b);
    const RunOutcome outcome_b = run_training(parse_experiment_config(j_b));
    CHECK(outcome_b.exit_code == 0);
    CHECK(drop_column(read_csv(out_b / "run.csv"), "mean_plan_seconds") ==
          drop_column(run, "mean_plan_seconds"));
    CHECK(read_csv(out_b / "episodes" / "iter_1_ep_1.csv") ==
          read_csv(out_a / "episodes" / "iter_1_ep_1.csv"));
}

TEST_CASE("a zero-iteration schedule still writes valid artifacts") {
    const fs::path out = fresh_dir("train_zero");
    json j = tiny_training_json("bridge_maze", out);
    j["schedule"]["iterations"] = 0;
    const RunOutcome outcome = run_training(parse_experiment_config(j));
    CHECK(outcome.exit_code == 0);

    const CsvTable run = read_csv(out / "run.csv");
    CHECK(run.rows.empty());
    CHECK(column_index(run, "return") >= 0);
    const json summary = read_json_file(out / "summary.json");
    CHECK(summary.at("iterations_completed") == 0);
    CHECK(summary.at("dataset_size") == 0);
    CHECK(summary.at("coverage") == 0.0);
    CHECK(fs::is_empty(out / "episodes"));
}

TEST_CASE("ensemble training checkpoints and evaluates round trip") {
    const fs::path train_dir = fresh_dir("train_ens");
    const fs::path ckpt = make_checkpoint(train_dir);

    const CsvTable run = read_csv(train_dir / "run.csv");
    const int loss0 = column_index(run, "loss_member_0");
    const int loss1 = column_index(run, "loss_member_1");
    REQUIRE(loss0 >= 0);
    REQUIRE(loss1 >= 0);
    for (const auto& row : run.rows) {
        CHECK(std::isfinite(std::stod(row[static_cast<std::size_t>(loss0)])));
        CHECK(std::isfinite(std::stod(row[static_cast<std::size_t>(loss1)])));
    }

    const fs::path eval_dir = fresh_dir("eval_ens");
    json j = tiny_training_json("noisy_integrator", eval_dir);
    j["model"] = {{"type", "ensemble"}, {"members", 2}, {"hidden_layers", 1},
                  {"hidden_size", 8}};
    const ExperimentConfig cfg = parse_experiment_config(j);
    const RunOutcome outcome = run_eval(cfg, ckpt.string());
    CHECK(outcome.exit_code == 0);

    const CsvTable eval_table = read_csv(eval_dir / "eval.csv");
    REQUIRE(eval_table.rows.size() == 3);  // evaluation.episodes
    const int steps_col = column_index(eval_table, "steps");
    for (const auto& row : eval_table.rows)
        CHECK(std::stol(row[static_cast<std::size_t>(steps_col)]) == 6);

    const json summary = read_json_file(eval_dir / "summary.json");
    CHECK(summary.at("episodes") == 3);
    CHECK(summary.at("model_type") == "ensemble");
    CHECK(fs::exists(eval_dir / "episodes" / "eval_ep_2.csv"));

    // An ensemble eval without a checkpoint cannot run.
    CHECK_THROWS_AS(run_eval(cfg, ""), ConfigError);
}

TEST_CASE("evaluation summary statistics recompute from its own rows") {
    const fs::path out = fresh_dir("eval_gt_maze");
    json j = tiny_training_json("bridge_maze", out);
    j["planner"] = {{"horizon", 5}, {"num_samples", 16}, {"num_particles", 2},
                    {"elite_size", 4}, {"opt_iterations", 2}};
    j["evaluation"] = {{"episodes", 4}, {"rollout_length", 50}};
    const ExperimentConfig cfg = parse_experiment_config(j);
    REQUIRE(run_eval(cfg, "").exit_code == 0);

    const CsvTable table = read_csv(out / "eval.csv");
    REQUIRE(table.rows.size() == 4);
    const int success_col = column_index(table, "success");
    const int fell_col = column_index(table, "fell");
    const int steps_col = column_index(table, "steps");
    const int violations_col = column_index(table, "violations");
    const int return_col = column_index(table, "return");

    int successes = 0, fells = 0;
    long steps = 0, violations = 0;
    double return_sum = 0.0, return_sq = 0.0;
    for (const auto& row : table.rows) {
        const int s = std::stoi(row[static_cast<std::size_t>(success_col)]);
        const int f = std::stoi(row[static_cast<std::size_t>(fell_col)]);
        const long st = std::stol(row[static_cast<std::size_t>(steps_col)]);
        const long v = std::stol(row[static_cast<std::size_t>(violations_col)]);
        const double r = std::stod(row[static_cast<std::size_t>(return_col)]);
        successes += s;
        fells += f;
        steps += st;
        violations += v;
        return_sum += r;
        return_sq += r * r;
        if (f == 1) {
            CHECK(v >= 1);
            CHECK(st < 50);  // fell short of the horizon
        }
        CHECK(s + f <= 1);  // an episode cannot both succeed and fall
    }

    const json summary = read_json_file(out / "summary.json");
    const double p = static_cast<double>(successes) / 4.0;
    CHECK(summary.at("success_rate").get<double>() == doctest::Approx(p).epsilon(1e-15));
    CHECK(summary.at("success_se").get<double>() ==
          doctest::Approx(std::sqrt(p * (1.0 - p) / 4.0)).epsilon(1e-12));
    const double fall_rate = static_cast<double>(fells) / 4.0;
    CHECK(summary.at("fall_rate").get<double>() ==
          doctest::Approx(fall_rate).epsilon(1e-15));
    CHECK(summary.at("violation_total").get<long>() == violations);
    if (steps > 0)
        CHECK(summary.at("violations_per_step").get<double>() ==
              doctest::Approx(static_cast<double>(violations) /
                              static_cast<double>(steps))
                  .epsilon(1e-12));
    const double mean_return = return_sum / 4.0;
    CHECK(summary.at("mean_return").get<double>() ==
          doctest::Approx(mean_return).epsilon(1e-12));
    const double var =
        std::max(0.0, (return_sq - 4.0 * mean_return * mean_return) / 3.0);
    CHECK(summary.at("return_se").get<double>() ==
          doctest::Approx(std::sqrt(var / 4.0)).epsilon(1e-9));
}

TEST_CASE("eval rejects a checkpoint whose dimensions do not match") {
    const fs::path train_dir = fresh_dir("train_mismatch");
    const fs::path ckpt = make_checkpoint(train_dir);  // 3-dim integrator states

    const fs::path eval_dir = fresh_dir("eval_mismatch");
    json j = tiny_training_json("bridge_maze", eval_dir);  // 4-dim states
    j["model"] = {{"type", "ensemble"}, {"members", 2}, {"hidden_layers", 1},
                  {"hidden_size", 8}};
    const ExperimentConfig cfg = parse_experiment_config(j);
    CHECK_THROWS_WITH_AS(run_eval(cfg, ckpt.string()),
                         doctest::Contains("checkpoint dimensions"), InvalidInputError);

    // Through the command line that is exit code 2.
    const fs::path cfg_path = eval_dir / "eval_config.json";
    std::ofstream(cfg_path) << j.dump(2);
    const std::string cfg_str = cfg_path.string();
    const std::string ckpt_str = ckpt.string();
    const char* argv[] = {"riskplan",       "eval",
                          "--config",       cfg_str.c_str(),
                          "--checkpoint",   ckpt_str.c_str()};
    CHECK(cli_main(6, argv) == 2);
}

TEST_CASE("sweep expands the grid into per-point runs") {
    const fs::path out = fresh_dir("sweep");
    json j = tiny_training_json("bridge_maze", out);
    j["schedule"] = {{"rollouts_per_iter", 1},
                     {"rollout_length", 5},
                     {"fit_epochs", 2},
                     {"iterations", 1}};
    j["sweep"]["grid"]["planner.horizon"] = json::array({2, 3});
    const RunOutcome outcome = run_sweep(j);
    CHECK(outcome.exit_code == 0);

    const CsvTable table = read_csv(out / "sweep.csv");
    REQUIRE(table.rows.size() == 2);
    const int key_col = column_index(table, "planner.horizon");
    const int exit_col = column_index(table, "exit_code");
    const int coverage_col = column_index(table, "coverage");
    REQUIRE(key_col >= 0);
    CHECK(table.rows[0][static_cast<std::size_t>(key_col)] == "2");
    CHECK(table.rows[1][static_cast<std::size_t>(key_col)] == "3");
    for (const auto& row : table.rows) {
        CHECK(row[static_cast<std::size_t>(exit_col)] == "0");
        CHECK(std::stod(row[static_cast<std::size_t>(coverage_col)]) > 0.0);
    }
    for (int point = 0; point < 2; ++point) {
        const fs::path pdir = out / ("point_" + std::to_string(point));
        CHECK(fs::exists(pdir / "run.csv"));
        const json pconfig = read_json_file(pdir / "config.json");
        CHECK(pconfig.at("planner").at("horizon") == point + 2);
        CHECK(read_json_file(pdir / "summary.json").at("status") == "ok");
    }

    // Per-point seeds differ from the base seed and from each other.
    const int seed_col = column_index(table, "seed");
    CHECK(table.rows[0][static_cast<std::size_t>(seed_col)] !=
          table.rows[1][static_cast<std::size_t>(seed_col)]);
}

TEST_CASE("malformed sweep blocks are rejected") {
    const fs::path out = fresh_dir("sweep_bad");
    json base = tiny_training_json("bridge_maze", out);
    CHECK_THROWS_WITH_AS(run_sweep(base), doctest::Contains("'sweep' block"), ConfigError);

    json j = base;
    j["sweep"] = json::object();
    CHECK_THROWS_WITH_AS(run_sweep(j), doctest::Contains("'grid' object"), ConfigError);

    j["sweep"] = {{"grid", {{"planner.horizon", json::array({2})}}}, {"repeat", 3}};
    CHECK_THROWS_WITH_AS(run_sweep(j), doctest::Contains("unknown key 'repeat'"),
                         ConfigError);

    j["sweep"] = {{"grid", json::object()}};
    CHECK_THROWS_AS(run_sweep(j), ConfigError);

    j["sweep"] = {{"grid", {{"planner.horizon", 2}}}};
    CHECK_THROWS_WITH_AS(run_sweep(j), doctest::Contains("nonempty array"), ConfigError);

    j["sweep"] = {{"grid", {{"planner.horizon", json::array()}}}};
    CHECK_THROWS_AS(run_sweep(j), ConfigError);
}

TEST_CASE("command line maps error classes to exit codes") {
    const fs::path dir = fresh_dir("cli");

    const char* unknown_verb[] = {"riskplan", "dance"};
    CHECK(cli_main(2, unknown_verb) == 2);
    const char* no_verb[] = {"riskplan"};
    CHECK(cli_main(1, no_verb) == 2);
    const char* no_config[] = {"riskplan", "train"};
    CHECK(cli_main(2, no_config) == 2);

    const char* missing[] = {"riskplan", "train", "--config", "/nonexistent/x.json"};
    CHECK(cli_main(4, missing) == 2);

    const fs::path bad_cfg = dir / "bad.json";
    std::ofstream(bad_cfg) << R"({"plannerr": {}})";
    const std::string bad_str = bad_cfg.string();
    const char* unknown_key[] = {"riskplan", "train", "--config", bad_str.c_str()};
    CHECK(cli_main(4, unknown_key) == 2);

    // A good config with CLI overrides lands in the overridden directory.
    const fs::path good_cfg = dir / "good.json";
    std::ofstream(good_cfg) << tiny_training_json("bridge_maze", dir / "ignored").dump(2);
    const fs::path out = dir / "overridden";
    const std::string good_str = good_cfg.string();
    const std::string out_str = out.string();
    const char* train_argv[] = {"riskplan",   "train",
                                "--config",   good_str.c_str(),
                                "--override", "schedule.iterations=0",
                                "--out",      out_str.c_str(),
                                "--seed",     "5"};
    CHECK(cli_main(10, train_argv) == 0);
    const json summary = read_json_file(out / "summary.json");
    CHECK(summary.at("seed") == 5);
    CHECK_FALSE(fs::exists(dir / "ignored"));

    const fs::path ckpt = make_checkpoint(dir / "ckpt_run");
    const std::string ckpt_str = ckpt.string();
    const char* inspect[] = {"riskplan", "inspect-model", "--checkpoint",
                             ckpt_str.c_str()};
    CHECK(cli_main(4, inspect) == 0);
    const char* inspect_missing[] = {"riskplan", "inspect-model", "--checkpoint",
                                     "/nonexistent/model.ckpt"};
    CHECK(cli_main(4, inspect_missing) == 2);
}
