#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riskplan/dataset.hpp"
#include "riskplan/mlp.hpp"
#include "riskplan/model.hpp"
#include "riskplan/normalizer.hpp"
#include "riskplan/rng.hpp"

namespace riskplan {

struct EnsembleConfig {
    int state_dim = 0;
    int action_dim = 0;
    int members = 5;
    int hidden_layers = 2;
    int hidden_size = 64;
    double min_logvar = -10.0;
    double max_logvar = 4.0;
};

struct FitConfig {
    double learning_rate = 2e-3;
    int batch_size = 512;
    double weight_decay = 1e-5;
    std::optional<double> grad_norm_clip = 2.0;  // per member, all params jointly
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct TrainingReport {
    /// epoch_loss[member][epoch]: dataset-weighted mean NLL seen that epoch.
    std::vector<std::vector<double>> epoch_loss;
};

/// Ensemble of stochastic MLPs modeling one-step dynamics as diagonal
/// Gaussians over state deltas. Each member has two output heads (mean delta
/// and raw log variance); the raw log variance is squashed into
/// [min_logvar, max_logvar] with the two softplus bounds, upper first:
///
///     lv = max_logvar - softplus(max_logvar - raw)
///     lv = min_logvar + softplus(lv - min_logvar)
///
/// The bounds are fixed constants, not learnable. Predictions are deltas:
/// next-state mean = state + mean_delta, always.
class EnsembleModel : public DynamicsModel {
public:
    EnsembleModel() = default;
    EnsembleModel(const EnsembleConfig& config, Seed seed);

    int member_count() const override { return static_cast<int>(members_.size()); }
    int state_dim() const override { return config_.state_dim; }
    int action_dim() const override { return config_.action_dim; }

    GaussianBatch forward_batch(int member, const Eigen::MatrixXd& states,
                                const Eigen::MatrixXd& actions) const override;

    /// Mean NLL of one member over the given dataset rows (all rows if empty
    /// `rows` is not allowed: the batch must be nonempty).
    double nll_loss(int member, const TransitionDataset& data,
                    const std::vector<int>& rows) const;
    double nll_loss(int member, const TransitionDataset& data) const;

    /// Analytic gradient of nll_loss w.r.t. the member's flat parameter
    /// vector, for optimizer steps and finite-difference verification.
    Eigen::VectorXd nll_gradient(int member, const TransitionDataset& data,
                                 const std::vector<int>& rows) const;

    /// Trains every member independently on its own shuffled mini-batches
    /// (Adam with decoupled weight decay). The input normalizer is refit to
    /// the full dataset before training. The last short batch is used, not
    /// dropped. Throws NumericError naming member and epoch if a loss goes
    /// non-finite.
    TrainingReport fit(const TransitionDataset& data, int epochs,
                       const FitConfig& config, Seed seed);

    const EnsembleConfig& config() const { return config_; }
    const InputNormalizer& normalizer() const { return normalizer_; }
    void refit_normalizer(const TransitionDataset& data);

    Mlp& member(int k) { return members_.at(k); }
    const Mlp& member(int k) const { return members_.at(k); }

    double bounded_log_var(double raw) const;

    /// Self-describing JSON checkpoint with an explicit format-version field.
    void save(const std::string& path, const std::string& config_hash = "") const;
    static EnsembleModel load(const std::string& path);
    static constexpr int kCheckpointVersion = 1;
    const std::string& checkpoint_config_hash() const { return config_hash_; }

private:
    struct LossGrad {
        double loss = 0.0;
        Eigen::VectorXd grad;
    };
    LossGrad loss_and_grad(int member, const Eigen::MatrixXd& states,
                           const Eigen::MatrixXd& actions,
                           const Eigen::MatrixXd& next_states, bool want_grad) const;

    void apply_log_var_bounds(Eigen::MatrixXd& raw) const;

    EnsembleConfig config_;
    std::vector<Mlp> members_;
    InputNormalizer normalizer_;
    std::string config_hash_;
};

}  // namespace riskplan
