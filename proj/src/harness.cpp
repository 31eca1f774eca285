#include "riskplan/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "riskplan/csv.hpp"

namespace riskplan {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Seed stream tags. Large constants so they never collide with the small
// per-step / per-episode child indices used below them.
constexpr std::uint64_t kEnvStreamTag = 0xE21301;
constexpr std::uint64_t kModelInitTag = 0x30DE11;
constexpr std::uint64_t kIterTag = 0x17E500;
constexpr std::uint64_t kFitTag = 0xF17000;
constexpr std::uint64_t kEvalTag = 0xE0A100;
constexpr std::uint64_t kSweepTag = 0x53EE90;

/// Fills the run-time planner fields the config file leaves open: action
/// bounds from the environment and the unsafe box (config override first,
/// environment default otherwise).
PlannerConfig planner_for(const ExperimentConfig& cfg, const Environment& env) {
    PlannerConfig planner = cfg.planner;
    planner.action_lo = env.action_lo();
    planner.action_hi = env.action_hi();
    if (cfg.safety_box) {
        if (static_cast<int>(cfg.safety_box->size()) != env.state_dim())
            throw ConfigError("safety_box dimension does not match the environment");
        planner.unsafe_box = BoxConstraint{*cfg.safety_box};
    } else {
        planner.unsafe_box = env.unsafe_box();
    }
    planner.validate();
    return planner;
}

std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw InvalidInputError("cannot open for writing: " + path.string());
    os << j.dump(2) << '\n';
}

/// Step log of one episode: state before the action, the action, and what the
/// step produced. Parses back losslessly through read_csv.
void write_episode_csv(const fs::path& path, const EpisodeLog& log, int state_dim,
                       int action_dim) {
    CsvTable table;
    table.columns = {"time"};
    for (int i = 0; i < state_dim; ++i) table.columns.push_back("state_" + std::to_string(i));
    for (int i = 0; i < action_dim; ++i)
        table.columns.push_back("action_" + std::to_string(i));
    table.columns.insert(table.columns.end(),
                         {"reward", "violation", "cost_task", "cost_aleatoric",
                          "cost_epistemic", "cost_safety"});
    for (std::size_t t = 0; t < log.actions.size(); ++t) {
        std::vector<std::string> row;
        row.push_back(std::to_string(t));
        for (int i = 0; i < state_dim; ++i) row.push_back(format_double(log.states[t](i)));
        for (int i = 0; i < action_dim; ++i)
            row.push_back(format_double(log.actions[t](i)));
        row.push_back(format_double(log.rewards[t]));
        row.push_back(std::to_string(log.violations[t]));
        const CostBreakdown& c = log.plan_costs[t];
        row.push_back(format_double(c.task));
        row.push_back(format_double(c.aleatoric));
        row.push_back(format_double(c.epistemic));
        row.push_back(format_double(c.safety));
        table.rows.push_back(std::move(row));
    }
    write_csv(path, table);
}

struct EpisodeAggregates {
    double mean_task = 0.0;
    double mean_aleatoric = 0.0;
    double mean_epistemic = 0.0;
    double mean_safety = 0.0;
};

EpisodeAggregates aggregate_costs(const EpisodeLog& log) {
    EpisodeAggregates agg;
    if (log.plan_costs.empty()) return agg;
    for (const CostBreakdown& c : log.plan_costs) {
        agg.mean_task += c.task;
        agg.mean_aleatoric += c.aleatoric;
        agg.mean_epistemic += c.epistemic;
        agg.mean_safety += c.safety;
    }
    const double n = static_cast<double>(log.plan_costs.size());
    agg.mean_task /= n;
    agg.mean_aleatoric /= n;
    agg.mean_epistemic /= n;
    agg.mean_safety /= n;
    return agg;
}

double binomial_se(double p, int n) {
    return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0;
}

}  // namespace

EpisodeLog run_episode(Environment& env, const DynamicsModel& model,
                       const PlannerConfig& planner_config, int max_steps, Seed seed) {
    require(max_steps >= 1, "episode needs at least one step");
    EpisodeLog log;
    PlannerState planner_state;
    const TrajectoryCostFn cost_fn = env.cost_fn();
    State state = env.reset(seed.child(kEnvStreamTag));
    log.states.push_back(state);

    double plan_seconds = 0.0;
    for (int step = 0; step < max_steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        const PlanResult plan = plan_step(model, state, cost_fn, planner_config,
                                          planner_state,
                                          seed.child(static_cast<std::uint64_t>(step)));
        plan_seconds += std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();

        const StepResult result = env.step(plan.action);
        log.actions.push_back(plan.action);
        log.rewards.push_back(result.reward);
        log.violations.push_back(result.violation ? 1 : 0);
        log.plan_costs.push_back(plan.diagnostics.executed);
        log.states.push_back(result.next_state);
        log.total_reward += result.reward;
        log.violation_count += result.violation ? 1 : 0;
        state = result.next_state;
        if (result.done) {
            log.success = !result.violation;
            break;
        }
    }
    if (!log.actions.empty())
        log.mean_plan_seconds = plan_seconds / static_cast<double>(log.actions.size());
    return log;
}

std::unique_ptr<DynamicsModel> make_planning_model(const ExperimentConfig& cfg,
                                                   std::shared_ptr<const Environment> env,
                                                   Seed seed) {
    if (cfg.model.type == "ground_truth")
        return std::make_unique<GroundTruthEnsemble>(std::move(env), cfg.model.members);
    EnsembleConfig ec;
    ec.state_dim = env->state_dim();
    ec.action_dim = env->action_dim();
    ec.members = cfg.model.members;
    ec.hidden_layers = cfg.model.hidden_layers;
    ec.hidden_size = cfg.model.hidden_size;
    ec.min_logvar = cfg.model.min_log_var;
    ec.max_logvar = cfg.model.max_log_var;
    return std::make_unique<EnsembleModel>(ec, seed);
}

RunOutcome run_training(const ExperimentConfig& cfg) {
    cfg.validate();
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir / "episodes");
    write_json_file(out_dir / "config.json", experiment_config_json(cfg));

    std::shared_ptr<const Environment> model_env =
        make_environment(cfg.environment_id, cfg.noise);
    std::unique_ptr<Environment> env = make_environment(cfg.environment_id, cfg.noise);
    const Seed root{cfg.seed};
    std::unique_ptr<DynamicsModel> model =
        make_planning_model(cfg, model_env, root.child(kModelInitTag));
    auto* ensemble = dynamic_cast<EnsembleModel*>(model.get());
    const PlannerConfig planner = planner_for(cfg, *env);
    const std::string hash = config_hash_hex(cfg);

    CsvTable run_table;
    run_table.columns = {"iteration",       "episode",        "seed",
                         "dataset_size",    "steps",          "return",
                         "success",         "violations",     "coverage",
                         "mean_task_cost",  "mean_aleatoric_cost",
                         "mean_epistemic_cost", "mean_safety_cost",
                         "mean_plan_seconds"};
    for (int k = 0; k < model->member_count(); ++k)
        run_table.columns.push_back("loss_member_" + std::to_string(k));

    TransitionDataset dataset(env->state_dim(), env->action_dim());
    std::vector<State> all_visited;
    const auto wall_start = std::chrono::steady_clock::now();

    json summary;
    summary["status"] = "ok";
    summary["config_hash"] = hash;
    summary["environment"] = cfg.environment_id;
    summary["model_type"] = cfg.model.type;
    summary["seed"] = cfg.seed;

    auto persist = [&](int iterations_done) {
        write_csv(out_dir / "run.csv", run_table);
        summary["iterations_completed"] = iterations_done;
        summary["dataset_size"] = dataset.size();
        summary["coverage"] = coverage(all_visited);
        summary["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
                .count();
        write_json_file(out_dir / "summary.json", summary);
    };

    persist(0);  // header-only run.csv is already a valid artifact
    int iterations_done = 0;
    try {
        for (int iter = 0; iter < cfg.schedule.iterations; ++iter) {
            const Seed iter_seed = root.child(kIterTag).child(static_cast<std::uint64_t>(iter));
            std::vector<EpisodeLog> logs;
            for (int ep = 0; ep < cfg.schedule.rollouts_per_iter; ++ep) {
                const Seed ep_seed = iter_seed.child(static_cast<std::uint64_t>(ep));
                EpisodeLog log = run_episode(*env, *model, planner,
                                             cfg.schedule.rollout_length, ep_seed);
                for (std::size_t t = 0; t < log.actions.size(); ++t)
                    dataset.append(log.states[t], log.actions[t], log.states[t + 1]);
                all_visited.insert(all_visited.end(), log.states.begin(), log.states.end());
                write_episode_csv(out_dir / "episodes" /
                                      ("iter_" + std::to_string(iter) + "_ep_" +
                                       std::to_string(ep) + ".csv"),
                                  log, env->state_dim(), env->action_dim());
                logs.push_back(std::move(log));
            }

            std::vector<double> final_losses;
            if (ensemble != nullptr) {
                const TrainingReport report =
                    ensemble->fit(dataset, cfg.schedule.fit_epochs, cfg.model.fit,
                                  root.child(kFitTag).child(static_cast<std::uint64_t>(iter)));
                for (const auto& member_losses : report.epoch_loss)
                    final_losses.push_back(member_losses.back());
                ensemble->save((out_dir / "model.ckpt").string(), hash);
            }

            // Rows carry cumulative coverage up to and including their episode.
            std::size_t consumed = all_visited.size();
            for (const EpisodeLog& log : logs) consumed -= log.states.size();
            for (int ep = 0; ep < static_cast<int>(logs.size()); ++ep) {
                const EpisodeLog& log = logs[static_cast<std::size_t>(ep)];
                consumed += log.states.size();
                const std::vector<State> upto(all_visited.begin(),
                                              all_visited.begin() +
                                                  static_cast<std::ptrdiff_t>(consumed));
                const EpisodeAggregates agg = aggregate_costs(log);
                std::vector<std::string> row = {
                    std::to_string(iter),
                    std::to_string(ep),
                    fmt_u64(iter_seed.child(static_cast<std::uint64_t>(ep)).value),
                    std::to_string(dataset.size()),
                    std::to_string(log.actions.size()),
                    format_double(log.total_reward),
                    log.success ? "1" : "0",
                    std::to_string(log.violation_count),
                    format_double(coverage(upto)),
                    format_double(agg.mean_task),
                    format_double(agg.mean_aleatoric),
                    format_double(agg.mean_epistemic),
                    format_double(agg.mean_safety),
                    format_double(log.mean_plan_seconds)};
                for (int k = 0; k < model->member_count(); ++k)
                    row.push_back(k < static_cast<int>(final_losses.size())
                                      ? format_double(final_losses[static_cast<std::size_t>(k)])
                                      : "nan");
                run_table.rows.push_back(std::move(row));
            }
            iterations_done = iter + 1;
            persist(iterations_done);
        }
    } catch (const NumericError& e) {
        summary["status"] = "numeric_failure";
        summary["message"] = e.what();
        persist(iterations_done);
        return {1, std::string("numeric failure: ") + e.what()};
    }
    persist(iterations_done);
    return {0, "training complete"};
}

RunOutcome run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
    cfg.validate();
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir / "episodes");
    write_json_file(out_dir / "config.json", experiment_config_json(cfg));

    std::shared_ptr<const Environment> model_env =
        make_environment(cfg.environment_id, cfg.noise);
    std::unique_ptr<Environment> env = make_environment(cfg.environment_id, cfg.noise);
    const Seed root{cfg.seed};

    std::unique_ptr<DynamicsModel> model;
    if (cfg.model.type == "ground_truth") {
        model = std::make_unique<GroundTruthEnsemble>(model_env, cfg.model.members);
    } else {
        if (checkpoint_path.empty())
            throw ConfigError("eval of an ensemble model needs --checkpoint");
        auto loaded = std::make_unique<EnsembleModel>(EnsembleModel::load(checkpoint_path));
        require(loaded->state_dim() == env->state_dim() &&
                    loaded->action_dim() == env->action_dim(),
                "checkpoint dimensions do not match the environment");
        model = std::move(loaded);
    }
    const PlannerConfig planner = planner_for(cfg, *env);
    const std::string hash = config_hash_hex(cfg);

    CsvTable table;
    table.columns = {"episode",
                     "seed",
                     "steps",
                     "return",
                     "success",
                     "violations",
                     "fell",
                     "mean_task_cost",
                     "mean_aleatoric_cost",
                     "mean_epistemic_cost",
                     "mean_safety_cost",
                     "mean_plan_seconds"};

    int successes = 0;
    int falls = 0;
    long violation_total = 0;
    long step_total = 0;
    double return_sum = 0.0;
    double return_sq_sum = 0.0;
    double plan_seconds_sum = 0.0;

    const int n = cfg.evaluation.episodes;
    for (int ep = 0; ep < n; ++ep) {
        const Seed ep_seed = root.child(kEvalTag).child(static_cast<std::uint64_t>(ep));
        const EpisodeLog log =
            run_episode(*env, *model, planner, cfg.evaluation.rollout_length, ep_seed);
        write_episode_csv(out_dir / "episodes" / ("eval_ep_" + std::to_string(ep) + ".csv"),
                          log, env->state_dim(), env->action_dim());
        const bool fell = !log.actions.empty() && log.violations.back() == 1 &&
                          log.actions.size() < static_cast<std::size_t>(
                                                   cfg.evaluation.rollout_length);
        const EpisodeAggregates agg = aggregate_costs(log);
        table.rows.push_back({std::to_string(ep), fmt_u64(ep_seed.value),
                              std::to_string(log.actions.size()),
                              format_double(log.total_reward), log.success ? "1" : "0",
                              std::to_string(log.violation_count), fell ? "1" : "0",
                              format_double(agg.mean_task), format_double(agg.mean_aleatoric),
                              format_double(agg.mean_epistemic), format_double(agg.mean_safety),
                              format_double(log.mean_plan_seconds)});
        successes += log.success ? 1 : 0;
        falls += fell ? 1 : 0;
        violation_total += log.violation_count;
        step_total += static_cast<long>(log.actions.size());
        return_sum += log.total_reward;
        return_sq_sum += log.total_reward * log.total_reward;
        plan_seconds_sum += log.mean_plan_seconds;
    }
    write_csv(out_dir / "eval.csv", table);

    const double success_rate = static_cast<double>(successes) / n;
    const double fall_rate = static_cast<double>(falls) / n;
    const double mean_return = return_sum / n;
    const double return_var =
        n > 1 ? std::max(0.0, (return_sq_sum - n * mean_return * mean_return) / (n - 1))
              : 0.0;

    json summary;
    summary["status"] = "ok";
    summary["config_hash"] = hash;
    summary["environment"] = cfg.environment_id;
    summary["model_type"] = cfg.model.type;
    summary["episodes"] = n;
    summary["success_rate"] = success_rate;
    summary["success_se"] = binomial_se(success_rate, n);
    summary["fall_rate"] = fall_rate;
    summary["fall_se"] = binomial_se(fall_rate, n);
    summary["mean_return"] = mean_return;
    summary["return_se"] = n > 0 ? std::sqrt(return_var / n) : 0.0;
    summary["violation_total"] = violation_total;
    summary["violations_per_step"] =
        step_total > 0 ? static_cast<double>(violation_total) / static_cast<double>(step_total)
                       : 0.0;
    summary["mean_plan_seconds"] = n > 0 ? plan_seconds_sum / n : 0.0;
    write_json_file(out_dir / "summary.json", summary);
    return {0, "evaluation complete"};
}

RunOutcome run_sweep(const nlohmann::json& config_with_sweep_block) {
    json base = config_with_sweep_block;
    if (!base.contains("sweep")) throw ConfigError("sweep config needs a 'sweep' block");
    const json sweep_block = base.at("sweep");
    base.erase("sweep");
    if (!sweep_block.is_object() || !sweep_block.contains("grid"))
        throw ConfigError("sweep block needs a 'grid' object");
    const json& grid = sweep_block.at("grid");
    for (const auto& item : sweep_block.items())
        if (item.key() != "grid")
            throw ConfigError("sweep: unknown key '" + item.key() + "'");
    if (!grid.is_object() || grid.empty())
        throw ConfigError("sweep grid must be a nonempty object of key -> value list");

    std::vector<std::string> keys;
    std::vector<std::vector<json>> values;
    std::size_t total = 1;
    for (const auto& item : grid.items()) {  // nlohmann iterates keys sorted
        if (!item.value().is_array() || item.value().empty())
            throw ConfigError("sweep grid entry '" + item.key() +
                              "' must be a nonempty array");
        keys.push_back(item.key());
        values.emplace_back(item.value().begin(), item.value().end());
        total *= item.value().size();
    }

    const ExperimentConfig base_cfg = parse_experiment_config(base);
    const fs::path out_dir(base_cfg.output_dir);
    fs::create_directories(out_dir);
    const Seed root{base_cfg.seed};

    CsvTable table;
    table.columns = {"point", "seed"};
    table.columns.insert(table.columns.end(), keys.begin(), keys.end());
    table.columns.insert(table.columns.end(),
                         {"exit_code", "status", "coverage", "dataset_size"});

    int failures = 0;
    for (std::size_t point = 0; point < total; ++point) {
        json point_json = base;
        std::vector<std::string> point_values;
        std::size_t rem = point;
        for (std::size_t k = 0; k < keys.size(); ++k) {
            const json& v = values[k][rem % values[k].size()];
            rem /= values[k].size();
            apply_override(point_json, keys[k] + "=" + v.dump());
            point_values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
        const Seed point_seed = root.child(kSweepTag).child(point);
        point_json["seed"] = point_seed.value;
        point_json["output_dir"] = (out_dir / ("point_" + std::to_string(point))).string();

        std::string status = "ok";
        int exit_code = 0;
        json point_summary;
        try {
            const ExperimentConfig point_cfg = parse_experiment_config(point_json);
            const RunOutcome outcome = run_training(point_cfg);
            exit_code = outcome.exit_code;
            if (exit_code != 0) status = "numeric_failure";
            std::ifstream is(out_dir / ("point_" + std::to_string(point)) / "summary.json");
            if (is) point_summary = json::parse(is, nullptr, false);
        } catch (const ConfigError& e) {
            status = std::string("config_error: ") + e.what();
            exit_code = 2;
        } catch (const std::exception& e) {
            status = std::string("error: ") + e.what();
            exit_code = 1;
        }
        if (exit_code != 0) ++failures;

        std::vector<std::string> row = {std::to_string(point), fmt_u64(point_seed.value)};
        row.insert(row.end(), point_values.begin(), point_values.end());
        row.push_back(std::to_string(exit_code));
        row.push_back(status);
        row.push_back(point_summary.contains("coverage")
                          ? format_double(point_summary["coverage"].get<double>())
                          : "nan");
        row.push_back(point_summary.contains("dataset_size")
                          ? std::to_string(point_summary["dataset_size"].get<std::size_t>())
                          : "0");
        table.rows.push_back(std::move(row));
        write_csv(out_dir / "sweep.csv", table);  // persisted after every point
    }
    if (failures > 0)
        return {1, std::to_string(failures) + " of " + std::to_string(total) +
                       " sweep points failed"};
    return {0, "sweep complete"};
}

}  // namespace riskplan
