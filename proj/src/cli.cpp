#include "riskplan/cli.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "riskplan/harness.hpp"

namespace riskplan {

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* config_opt =
        cmd->add_option("--config", args.config_path, "experiment config file (JSON)");
    if (config_required) config_opt->required();
    cmd->add_option("--seed", args.seed, "experiment seed (overrides the config)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides the config)");
    cmd->add_option("--override", args.overrides,
                    "config override, key.path=value; repeatable");
}

json load_config_json(const CommonArgs& args) {
    std::ifstream is(args.config_path);
    if (!is) throw ConfigError("cannot open config file: " + args.config_path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + args.config_path + ": " + e.what());
    }
    for (const std::string& assignment : args.overrides) apply_override(j, assignment);
    if (args.seed) j["seed"] = *args.seed;
    if (!args.out_dir.empty()) j["output_dir"] = args.out_dir;
    return j;
}

int inspect_model(const std::string& checkpoint_path) {
    const EnsembleModel model = EnsembleModel::load(checkpoint_path);
    std::size_t parameter_count = 0;
    for (int k = 0; k < model.member_count(); ++k)
        parameter_count += static_cast<std::size_t>(model.member(k).parameters().size());
    json j;
    j["checkpoint"] = checkpoint_path;
    j["format_version"] = EnsembleModel::kCheckpointVersion;
    j["members"] = model.member_count();
    j["state_dim"] = model.state_dim();
    j["action_dim"] = model.action_dim();
    j["hidden_layers"] = model.config().hidden_layers;
    j["hidden_size"] = model.config().hidden_size;
    j["min_log_var"] = model.config().min_logvar;
    j["max_log_var"] = model.config().max_logvar;
    j["parameter_count"] = parameter_count;
    j["config_hash"] = model.checkpoint_config_hash();
    j["normalizer_mean"] = std::vector<double>(
        model.normalizer().mean().data(),
        model.normalizer().mean().data() + model.normalizer().mean().size());
    j["normalizer_std"] = std::vector<double>(
        model.normalizer().stddev().data(),
        model.normalizer().stddev().data() + model.normalizer().stddev().size());
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"risk-averse trajectory optimization experiments"};
    app.require_subcommand(1);

    CommonArgs train_args;
    CLI::App* train = app.add_subcommand("train", "alternate data collection and model fitting");
    add_common(train, train_args);

    CommonArgs eval_args;
    std::string checkpoint;
    CLI::App* eval = app.add_subcommand("eval", "run evaluation episodes with a fixed model");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", checkpoint,
                     "model checkpoint (required for ensemble models)");

    CommonArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid of training runs");
    add_common(sweep, sweep_args);

    std::string inspect_path;
    CLI::App* inspect = app.add_subcommand("inspect-model", "print checkpoint metadata");
    inspect->add_option("--checkpoint", inspect_path, "model checkpoint")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help exits clean; any parse error is invalid input
    }

    try {
        RunOutcome outcome;
        if (train->parsed()) {
            outcome = run_training(parse_experiment_config(load_config_json(train_args)));
        } else if (eval->parsed()) {
            outcome = run_eval(parse_experiment_config(load_config_json(eval_args)), checkpoint);
        } else if (sweep->parsed()) {
            outcome = run_sweep(load_config_json(sweep_args));
        } else {
            return inspect_model(inspect_path);
        }
        if (!outcome.message.empty())
            (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << '\n';
        return outcome.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidInputError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace riskplan
