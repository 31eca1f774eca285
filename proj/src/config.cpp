#include "riskplan/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>

namespace riskplan {

namespace {

using nlohmann::json;

/// View over one JSON object that tracks which keys the schema consumed;
/// finish() turns any leftover key into a hard error with its full path.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    ~StrictObject() = default;

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        consumed_.insert(key);
        try {
            j_.at(key).get_to(out);
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong value type");
        }
    }

    const json* child(const std::string& key) {
        if (!has(key)) return nullptr;
        consumed_.insert(key);
        return &j_.at(key);
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!consumed_.count(item.key()))
                throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> consumed_;
};

void parse_wind(const json& j, const std::string& path, WindConfig& out) {
    StrictObject o(j, path);
    o.read("x0_lo", out.x0_lo);
    o.read("x0_hi", out.x0_hi);
    o.read("x1_lo", out.x1_lo);
    o.read("x1_hi", out.x1_hi);
    o.read("max_force", out.max_force);
    o.read("resample_period", out.resample_period);
    o.finish();
}

void parse_action_noise(const json& j, const std::string& path, ActionNoiseConfig& out) {
    StrictObject o(j, path);
    o.read("velocity_gate", out.velocity_gate);
    o.read("variance", out.variance);
    o.finish();
}

void parse_noise(const json& j, const std::string& path, EnvNoiseConfig& out) {
    StrictObject o(j, path);
    if (const json* w = o.child("wind")) parse_wind(*w, path + ".wind", out.wind);
    if (const json* a = o.child("action_noise"))
        parse_action_noise(*a, path + ".action_noise", out.action_noise);
    o.finish();
}

void parse_fit(const json& j, const std::string& path, FitConfig& out) {
    StrictObject o(j, path);
    o.read("learning_rate", out.learning_rate);
    o.read("batch_size", out.batch_size);
    o.read("weight_decay", out.weight_decay);
    if (o.has("grad_norm_clip")) {
        if (const json* g = o.child("grad_norm_clip")) {
            if (g->is_null()) {
                out.grad_norm_clip.reset();
            } else if (g->is_number()) {
                out.grad_norm_clip = g->get<double>();
            } else {
                throw ConfigError(path + ".grad_norm_clip: expected number or null");
            }
        }
    }
    o.read("adam_beta1", out.adam_beta1);
    o.read("adam_beta2", out.adam_beta2);
    o.read("adam_eps", out.adam_eps);
    o.finish();
}

void parse_model(const json& j, const std::string& path, ModelConfig& out) {
    StrictObject o(j, path);
    o.read("type", out.type);
    o.read("members", out.members);
    o.read("hidden_layers", out.hidden_layers);
    o.read("hidden_size", out.hidden_size);
    o.read("min_log_var", out.min_log_var);
    o.read("max_log_var", out.max_log_var);
    if (const json* f = o.child("fit")) parse_fit(*f, path + ".fit", out.fit);
    o.finish();
}

void parse_weights(const json& j, const std::string& path, CostWeights& out) {
    StrictObject o(j, path);
    o.read("aleatoric", out.aleatoric);
    o.read("epistemic", out.epistemic);
    o.read("safety", out.safety);
    o.finish();
}

void parse_planner(const json& j, const std::string& path, PlannerConfig& out,
                   std::string& measure_name) {
    StrictObject o(j, path);
    o.read("horizon", out.horizon);
    o.read("num_samples", out.num_samples);
    o.read("num_particles", out.num_particles);
    o.read("elite_size", out.elite_size);
    o.read("opt_iterations", out.opt_iterations);
    o.read("noise_beta", out.noise_beta);
    o.read("alpha", out.alpha);
    o.read("init_std", out.init_std);
    o.read("fraction_elites_reused", out.fraction_elites_reused);
    o.read("keep_previous_elites", out.keep_previous_elites);
    o.read("shift_elites_over_time", out.shift_elites_over_time);
    o.read("execute_best_elite", out.execute_best_elite);
    o.read("use_mean_actions", out.use_mean_actions);
    o.read("relative_init", out.relative_init);
    if (const json* w = o.child("weights")) parse_weights(*w, path + ".weights", out.weights);
    o.read("aleatoric_measure", measure_name);
    o.read("safety_delta", out.safety_delta);
    o.finish();
}

void parse_schedule(const json& j, const std::string& path, ScheduleConfig& out) {
    StrictObject o(j, path);
    o.read("rollouts_per_iter", out.rollouts_per_iter);
    o.read("rollout_length", out.rollout_length);
    o.read("fit_epochs", out.fit_epochs);
    o.read("iterations", out.iterations);
    o.finish();
}

void parse_evaluation(const json& j, const std::string& path, EvalConfig& out) {
    StrictObject o(j, path);
    o.read("episodes", out.episodes);
    o.read("rollout_length", out.rollout_length);
    o.finish();
}

std::vector<std::optional<Interval>> parse_box(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array");
    std::vector<std::optional<Interval>> dims;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& e = j[i];
        const std::string entry_path = path + "[" + std::to_string(i) + "]";
        if (e.is_null()) {
            dims.emplace_back(std::nullopt);
        } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
            dims.emplace_back(Interval{e[0].get<double>(), e[1].get<double>()});
        } else {
            throw ConfigError(entry_path + ": expected null or [lo, hi]");
        }
    }
    return dims;
}

json box_json(const std::vector<std::optional<Interval>>& dims) {
    json arr = json::array();
    for (const auto& d : dims) {
        if (d) {
            arr.push_back(json::array({d->lo, d->hi}));
        } else {
            arr.push_back(nullptr);
        }
    }
    return arr;
}

}  // namespace

void ExperimentConfig::validate() const {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    };
    noise.validate();
    check(model.type == "ensemble" || model.type == "ground_truth",
          "model.type must be 'ensemble' or 'ground_truth'");
    check(model.members >= 1, "model.members must be >= 1");
    check(model.hidden_layers >= 1, "model.hidden_layers must be >= 1");
    check(model.hidden_size >= 1, "model.hidden_size must be >= 1");
    check(model.min_log_var < model.max_log_var, "log-variance bounds out of order");
    check(model.fit.learning_rate > 0.0, "model.fit.learning_rate must be positive");
    check(model.fit.batch_size >= 1, "model.fit.batch_size must be >= 1");
    check(model.fit.weight_decay >= 0.0, "model.fit.weight_decay must be nonnegative");
    check(schedule.rollouts_per_iter >= 1, "schedule.rollouts_per_iter must be >= 1");
    check(schedule.rollout_length >= 1, "schedule.rollout_length must be >= 1");
    check(schedule.fit_epochs >= 1, "schedule.fit_epochs must be >= 1");
    check(schedule.iterations >= 0, "schedule.iterations must be >= 0");
    check(evaluation.episodes >= 1, "evaluation.episodes must be >= 1");
    check(evaluation.rollout_length >= 1, "evaluation.rollout_length must be >= 1");
    check(!output_dir.empty(), "output_dir must not be empty");
    // Planner bounds come from the environment at run time; validate the rest
    // on a copy with placeholder bounds.
    PlannerConfig p = planner;
    p.action_lo = Eigen::VectorXd::Constant(1, -1.0);
    p.action_hi = Eigen::VectorXd::Constant(1, 1.0);
    p.validate();
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    StrictObject o(j, "config");
    o.read("environment", cfg.environment_id);
    if (const json* n = o.child("noise")) parse_noise(*n, "config.noise", cfg.noise);
    if (const json* m = o.child("model")) parse_model(*m, "config.model", cfg.model);
    std::string measure = "variance";
    if (const json* p = o.child("planner"))
        parse_planner(*p, "config.planner", cfg.planner, measure);
    if (measure == "variance") {
        cfg.planner.aleatoric_measure = AleatoricMeasure::kVariance;
    } else if (measure == "entropy") {
        cfg.planner.aleatoric_measure = AleatoricMeasure::kEntropy;
    } else {
        throw ConfigError("config.planner.aleatoric_measure: 'variance' or 'entropy'");
    }
    if (const json* b = o.child("safety_box")) {
        if (!b->is_null()) cfg.safety_box = parse_box(*b, "config.safety_box");
    }
    if (const json* s = o.child("schedule")) parse_schedule(*s, "config.schedule", cfg.schedule);
    if (const json* e = o.child("evaluation"))
        parse_evaluation(*e, "config.evaluation", cfg.evaluation);
    if (o.has("seed")) {
        if (const json* s = o.child("seed")) {
            // Accept any integral JSON value >= 0; the DOM stores small
            // literals as signed even when the value is nonnegative.
            const bool ok = s->is_number_unsigned() ||
                            (s->is_number_integer() && s->get<std::int64_t>() >= 0);
            if (!ok) throw ConfigError("config.seed: expected a nonnegative integer");
            cfg.seed = s->get<std::uint64_t>();
        }
    }
    o.read("output_dir", cfg.output_dir);
    o.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_experiment_config(j);
}

nlohmann::json experiment_config_json(const ExperimentConfig& cfg) {
    json j;
    j["environment"] = cfg.environment_id;
    j["noise"]["wind"] = {{"x0_lo", cfg.noise.wind.x0_lo},
                          {"x0_hi", cfg.noise.wind.x0_hi},
                          {"x1_lo", cfg.noise.wind.x1_lo},
                          {"x1_hi", cfg.noise.wind.x1_hi},
                          {"max_force", cfg.noise.wind.max_force},
                          {"resample_period", cfg.noise.wind.resample_period}};
    j["noise"]["action_noise"] = {{"velocity_gate", cfg.noise.action_noise.velocity_gate},
                                  {"variance", cfg.noise.action_noise.variance}};
    j["model"] = {{"type", cfg.model.type},
                  {"members", cfg.model.members},
                  {"hidden_layers", cfg.model.hidden_layers},
                  {"hidden_size", cfg.model.hidden_size},
                  {"min_log_var", cfg.model.min_log_var},
                  {"max_log_var", cfg.model.max_log_var},
                  {"fit",
                   {{"learning_rate", cfg.model.fit.learning_rate},
                    {"batch_size", cfg.model.fit.batch_size},
                    {"weight_decay", cfg.model.fit.weight_decay},
                    {"grad_norm_clip", cfg.model.fit.grad_norm_clip
                                           ? json(*cfg.model.fit.grad_norm_clip)
                                           : json(nullptr)},
                    {"adam_beta1", cfg.model.fit.adam_beta1},
                    {"adam_beta2", cfg.model.fit.adam_beta2},
                    {"adam_eps", cfg.model.fit.adam_eps}}}};
    j["planner"] = {
        {"horizon", cfg.planner.horizon},
        {"num_samples", cfg.planner.num_samples},
        {"num_particles", cfg.planner.num_particles},
        {"elite_size", cfg.planner.elite_size},
        {"opt_iterations", cfg.planner.opt_iterations},
        {"noise_beta", cfg.planner.noise_beta},
        {"alpha", cfg.planner.alpha},
        {"init_std", cfg.planner.init_std},
        {"fraction_elites_reused", cfg.planner.fraction_elites_reused},
        {"keep_previous_elites", cfg.planner.keep_previous_elites},
        {"shift_elites_over_time", cfg.planner.shift_elites_over_time},
        {"execute_best_elite", cfg.planner.execute_best_elite},
        {"use_mean_actions", cfg.planner.use_mean_actions},
        {"relative_init", cfg.planner.relative_init},
        {"weights",
         {{"aleatoric", cfg.planner.weights.aleatoric},
          {"epistemic", cfg.planner.weights.epistemic},
          {"safety", cfg.planner.weights.safety}}},
        {"aleatoric_measure",
         cfg.planner.aleatoric_measure == AleatoricMeasure::kEntropy ? "entropy" : "variance"},
        {"safety_delta", cfg.planner.safety_delta}};
    j["safety_box"] = cfg.safety_box ? box_json(*cfg.safety_box) : json(nullptr);
    j["schedule"] = {{"rollouts_per_iter", cfg.schedule.rollouts_per_iter},
                     {"rollout_length", cfg.schedule.rollout_length},
                     {"fit_epochs", cfg.schedule.fit_epochs},
                     {"iterations", cfg.schedule.iterations}};
    j["evaluation"] = {{"episodes", cfg.evaluation.episodes},
                       {"rollout_length", cfg.evaluation.rollout_length}};
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    return j;
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string key_path = assignment.substr(0, eq);
    const std::string value_text = assignment.substr(eq + 1);

    json value = json::parse(value_text, nullptr, false);
    if (value.is_discarded()) value = value_text;  // bare strings stay strings

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key_path.find('.', start);
        const std::string key = key_path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("empty key segment in override: " + assignment);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string text = experiment_config_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

}  // namespace riskplan
