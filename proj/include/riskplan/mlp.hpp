#pragma once

#include <Eigen/Core>
#include <vector>

#include "riskplan/rng.hpp"

namespace riskplan {

struct MlpShape {
    int input_dim = 0;
    int output_dim = 0;
    int hidden_layers = 2;
    int hidden_size = 64;

    bool operator==(const MlpShape&) const = default;
};

/// Fully connected network with silu hidden activations and a linear output
/// layer. Gradients are computed by hand; there is no autodiff anywhere in
/// the training path, which keeps the parameter layout explicit and lets the
/// finite-difference checks address every weight.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(const MlpShape& shape);

    /// Truncated-normal weights (std 1/sqrt(fan_in), cut at 2 std), zero biases.
    void init_weights(Rng& rng);

    /// One sample per row.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;

    struct Cache {
        Eigen::MatrixXd input;
        std::vector<Eigen::MatrixXd> pre;  // pre-activations of hidden layers
        std::vector<Eigen::MatrixXd> act;  // silu outputs of hidden layers
    };

    Eigen::MatrixXd forward_cached(const Eigen::MatrixXd& input, Cache& cache) const;

    /// Accumulates dLoss/dParams into `grads` (same shape, caller zeroes).
    /// `grad_output` is dLoss/d(network output) with one sample per row.
    void backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Mlp& grads) const;

    Eigen::Index parameter_count() const;
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);
    void set_zero();

    const MlpShape& shape() const { return shape_; }
    std::vector<Eigen::MatrixXd>& weights() { return weights_; }
    std::vector<Eigen::VectorXd>& biases() { return biases_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

    static double silu(double z) { return z / (1.0 + std::exp(-z)); }

private:
    MlpShape shape_;
    std::vector<Eigen::MatrixXd> weights_;  // layer l: (out x in)
    std::vector<Eigen::VectorXd> biases_;
};

}  // namespace riskplan
