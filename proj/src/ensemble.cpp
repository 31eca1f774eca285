#include "riskplan/ensemble.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace riskplan {

namespace {

// log(1 + e^x) without overflow on either tail.
double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2 pi)

std::vector<int> all_rows(std::size_t n) {
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    return idx;
}

}  // namespace

EnsembleModel::EnsembleModel(const EnsembleConfig& config, Seed seed)
    : config_(config) {
    require(config.state_dim > 0 && config.action_dim > 0, "ensemble needs positive dims");
    require(config.members >= 1, "ensemble needs at least one member");
    require(config.min_logvar < config.max_logvar, "log-var bounds out of order");
    const MlpShape shape{config.state_dim + config.action_dim, 2 * config.state_dim,
                         config.hidden_layers, config.hidden_size};
    members_.reserve(static_cast<std::size_t>(config.members));
    for (int k = 0; k < config.members; ++k) {
        Mlp net(shape);
        Rng rng(seed.child(static_cast<std::uint64_t>(k)));
        net.init_weights(rng);
        members_.push_back(std::move(net));
    }
    normalizer_ = InputNormalizer(config.state_dim + config.action_dim);
}

double EnsembleModel::bounded_log_var(double raw) const {
    const double upper = config_.max_logvar - softplus(config_.max_logvar - raw);
    return config_.min_logvar + softplus(upper - config_.min_logvar);
}

void EnsembleModel::apply_log_var_bounds(Eigen::MatrixXd& raw) const {
    raw = raw.unaryExpr([this](double v) { return bounded_log_var(v); });
}

GaussianBatch EnsembleModel::forward_batch(int member, const Eigen::MatrixXd& states,
                                           const Eigen::MatrixXd& actions) const {
    require(member >= 0 && member < member_count(), "member index out of range");
    require(states.cols() == config_.state_dim, "state dimension mismatch");
    require(actions.cols() == config_.action_dim, "action dimension mismatch");
    require(states.rows() == actions.rows(), "state/action row count mismatch");

    Eigen::MatrixXd input(states.rows(), states.cols() + actions.cols());
    input << states, actions;
    const Eigen::MatrixXd out =
        members_[static_cast<std::size_t>(member)].forward(normalizer_.normalize(input));
    if (!out.allFinite()) throw NumericError("non-finite ensemble member output");

    GaussianBatch batch;
    batch.mean_delta = out.leftCols(config_.state_dim);
    batch.log_var = out.rightCols(config_.state_dim);
    apply_log_var_bounds(batch.log_var);
    return batch;
}

EnsembleModel::LossGrad EnsembleModel::loss_and_grad(int member,
                                                     const Eigen::MatrixXd& states,
                                                     const Eigen::MatrixXd& actions,
                                                     const Eigen::MatrixXd& next_states,
                                                     bool want_grad) const {
    const Eigen::Index n = states.rows();
    const int d = config_.state_dim;
    const Mlp& net = members_[static_cast<std::size_t>(member)];

    Eigen::MatrixXd input(n, states.cols() + actions.cols());
    input << states, actions;
    Mlp::Cache cache;
    const Eigen::MatrixXd out = net.forward_cached(normalizer_.normalize(input), cache);
    if (!out.allFinite()) throw NumericError("non-finite ensemble member output");

    const Eigen::MatrixXd raw_lv = out.rightCols(d);
    Eigen::MatrixXd lv = raw_lv;
    apply_log_var_bounds(lv);
    const Eigen::MatrixXd residual = next_states - states - out.leftCols(d);
    const Eigen::ArrayXXd inv_var = (-lv).array().exp();
    const Eigen::ArrayXXd r2 = residual.array().square();

    const double loss =
        (kHalfLog2Pi * d) + (0.5 * lv.array() + 0.5 * r2 * inv_var).rowwise().sum().mean();

    LossGrad result;
    result.loss = loss;
    if (!want_grad) return result;

    // d loss / d mean_delta and d loss / d raw log_var, per sample and dim.
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd grad_out(n, 2 * d);
    grad_out.leftCols(d) = (-(residual.array() * inv_var) * inv_n).matrix();
    // Chain through both softplus bounds.
    Eigen::ArrayXXd dlv_draw(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double raw = raw_lv(i, j);
            const double lv1 = config_.max_logvar - softplus(config_.max_logvar - raw);
            dlv_draw(i, j) = logistic(config_.max_logvar - raw) *
                             logistic(lv1 - config_.min_logvar);
        }
    }
    const Eigen::ArrayXXd dloss_dlv = 0.5 * (1.0 - r2 * inv_var) * inv_n;
    grad_out.rightCols(d) = (dloss_dlv * dlv_draw).matrix();

    Mlp grads(net.shape());
    net.backward(cache, grad_out, grads);
    result.grad = grads.parameters();
    return result;
}

double EnsembleModel::nll_loss(int member, const TransitionDataset& data,
                               const std::vector<int>& rows) const {
    require(!rows.empty(), "nll_loss on empty batch");
    Eigen::MatrixXd s, a, ns;
    data.gather(rows, s, a, ns);
    return loss_and_grad(member, s, a, ns, false).loss;
}

double EnsembleModel::nll_loss(int member, const TransitionDataset& data) const {
    require(!data.empty(), "nll_loss on empty dataset");
    return nll_loss(member, data, all_rows(data.size()));
}

Eigen::VectorXd EnsembleModel::nll_gradient(int member, const TransitionDataset& data,
                                            const std::vector<int>& rows) const {
    require(!rows.empty(), "nll_gradient on empty batch");
    Eigen::MatrixXd s, a, ns;
    data.gather(rows, s, a, ns);
    return loss_and_grad(member, s, a, ns, true).grad;
}

void EnsembleModel::refit_normalizer(const TransitionDataset& data) {
    require(!data.empty(), "normalizer refit on empty dataset");
    normalizer_.fit(data.input_matrix());
}

TrainingReport EnsembleModel::fit(const TransitionDataset& data, int epochs,
                                  const FitConfig& config, Seed seed) {
    require(!data.empty(), "fit on empty dataset");
    require(epochs >= 0, "negative epoch count");
    require(config.batch_size >= 1, "batch_size must be positive");
    refit_normalizer(data);

    const int K = member_count();
    const std::size_t n = data.size();
    TrainingReport report;
    report.epoch_loss.assign(static_cast<std::size_t>(K), {});

    for (int k = 0; k < K; ++k) {
        Mlp& net = members_[static_cast<std::size_t>(k)];
        const Eigen::Index p = net.parameter_count();
        Eigen::VectorXd theta = net.parameters();
        Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
        long step = 0;
        const Seed member_seed = seed.child(static_cast<std::uint64_t>(k));

        for (int epoch = 0; epoch < epochs; ++epoch) {
            Rng shuffle_rng(member_seed.child(static_cast<std::uint64_t>(epoch)));
            const std::vector<int> order = shuffle_rng.permutation(static_cast<int>(n));
            double weighted_loss = 0.0;

            for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t stop = std::min(n, at + static_cast<std::size_t>(config.batch_size));
                const std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(at),
                                             order.begin() + static_cast<std::ptrdiff_t>(stop));
                Eigen::MatrixXd s, a, ns;
                data.gather(batch, s, a, ns);
                LossGrad lg = loss_and_grad(k, s, a, ns, true);
                if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
                    throw NumericError("non-finite training loss (member " + std::to_string(k) +
                                       ", epoch " + std::to_string(epoch) + ")");
                }
                weighted_loss += lg.loss * static_cast<double>(batch.size());

                if (config.grad_norm_clip) {
                    const double norm = lg.grad.norm();
                    if (norm > *config.grad_norm_clip)
                        lg.grad *= *config.grad_norm_clip / norm;
                }

                ++step;
                m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * lg.grad;
                v = config.adam_beta2 * v +
                    (1.0 - config.adam_beta2) * lg.grad.array().square().matrix();
                const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
                const Eigen::ArrayXd update =
                    (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.adam_eps);
                theta -= config.learning_rate *
                         (update.matrix() + config.weight_decay * theta);
                net.set_parameters(theta);
            }
            report.epoch_loss[static_cast<std::size_t>(k)].push_back(
                weighted_loss / static_cast<double>(n));
        }
    }
    return report;
}

void EnsembleModel::save(const std::string& path, const std::string& config_hash) const {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["kind"] = "ensemble_checkpoint";
    j["config_hash"] = config_hash.empty() ? config_hash_ : config_hash;
    j["state_dim"] = config_.state_dim;
    j["action_dim"] = config_.action_dim;
    j["members"] = config_.members;
    j["hidden_layers"] = config_.hidden_layers;
    j["hidden_size"] = config_.hidden_size;
    j["min_logvar"] = config_.min_logvar;
    j["max_logvar"] = config_.max_logvar;
    j["normalizer_mean"] = std::vector<double>(
        normalizer_.mean().data(), normalizer_.mean().data() + normalizer_.mean().size());
    j["normalizer_std"] = std::vector<double>(
        normalizer_.stddev().data(),
        normalizer_.stddev().data() + normalizer_.stddev().size());
    nlohmann::json weights = nlohmann::json::array();
    for (const Mlp& net : members_) {
        const Eigen::VectorXd flat = net.parameters();
        weights.push_back(std::vector<double>(flat.data(), flat.data() + flat.size()));
    }
    j["weights"] = std::move(weights);

    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot write checkpoint: " + path);
    out << j.dump();
}

EnsembleModel EnsembleModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot read checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError(std::string("malformed checkpoint: ") + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != kCheckpointVersion)
        throw InvalidInputError("unsupported checkpoint format_version");

    EnsembleConfig cfg;
    cfg.state_dim = j.at("state_dim").get<int>();
    cfg.action_dim = j.at("action_dim").get<int>();
    cfg.members = j.at("members").get<int>();
    cfg.hidden_layers = j.at("hidden_layers").get<int>();
    cfg.hidden_size = j.at("hidden_size").get<int>();
    cfg.min_logvar = j.at("min_logvar").get<double>();
    cfg.max_logvar = j.at("max_logvar").get<double>();

    EnsembleModel model(cfg, Seed{0});
    const auto mean = j.at("normalizer_mean").get<std::vector<double>>();
    const auto std = j.at("normalizer_std").get<std::vector<double>>();
    require(static_cast<int>(mean.size()) == cfg.state_dim + cfg.action_dim &&
                mean.size() == std.size(),
            "checkpoint normalizer size mismatch");
    model.normalizer_.set_moments(
        Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
        Eigen::Map<const Eigen::VectorXd>(std.data(), static_cast<Eigen::Index>(std.size())));

    const auto& weights = j.at("weights");
    require(static_cast<int>(weights.size()) == cfg.members,
            "checkpoint member count mismatch");
    for (int k = 0; k < cfg.members; ++k) {
        const auto flat = weights[static_cast<std::size_t>(k)].get<std::vector<double>>();
        require(static_cast<Eigen::Index>(flat.size()) ==
                    model.members_[static_cast<std::size_t>(k)].parameter_count(),
                "checkpoint weight size mismatch");
        model.members_[static_cast<std::size_t>(k)].set_parameters(
            Eigen::Map<const Eigen::VectorXd>(flat.data(),
                                              static_cast<Eigen::Index>(flat.size())));
    }
    model.config_hash_ = j.value("config_hash", std::string());
    return model;
}

}  // namespace riskplan
