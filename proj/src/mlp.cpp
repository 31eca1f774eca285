#include "riskplan/mlp.hpp"

#include <cmath>

#include "riskplan/types.hpp"

namespace riskplan {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double silu_prime(double z) {
    const double s = logistic(z);
    return s * (1.0 + z * (1.0 - s));
}

}  // namespace

Mlp::Mlp(const MlpShape& shape) : shape_(shape) {
    require(shape.input_dim > 0 && shape.output_dim > 0, "mlp needs positive dims");
    require(shape.hidden_layers >= 1 && shape.hidden_size >= 1,
            "mlp needs at least one hidden layer");
    int in = shape.input_dim;
    for (int l = 0; l < shape.hidden_layers; ++l) {
        weights_.emplace_back(Eigen::MatrixXd::Zero(shape.hidden_size, in));
        biases_.emplace_back(Eigen::VectorXd::Zero(shape.hidden_size));
        in = shape.hidden_size;
    }
    weights_.emplace_back(Eigen::MatrixXd::Zero(shape.output_dim, in));
    biases_.emplace_back(Eigen::VectorXd::Zero(shape.output_dim));
}

void Mlp::init_weights(Rng& rng) {
    for (auto& w : weights_) {
        const double std = 1.0 / std::sqrt(static_cast<double>(w.cols()));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                double z = rng.normal();
                while (std::abs(z) > 2.0) z = rng.normal();  // truncate at 2 std
                w(i, j) = std * z;
            }
        }
    }
    for (auto& b : biases_) b.setZero();
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
    Cache cache;
    return forward_cached(input, cache);
}

Eigen::MatrixXd Mlp::forward_cached(const Eigen::MatrixXd& input, Cache& cache) const {
    require(input.cols() == shape_.input_dim, "mlp input dimension mismatch");
    cache.input = input;
    cache.pre.clear();
    cache.act.clear();
    Eigen::MatrixXd cur = input;
    for (int l = 0; l < shape_.hidden_layers; ++l) {
        Eigen::MatrixXd pre =
            (cur * weights_[static_cast<std::size_t>(l)].transpose()).rowwise() +
            biases_[static_cast<std::size_t>(l)].transpose();
        cache.pre.push_back(pre);
        cur = pre.unaryExpr([](double z) { return silu(z); });
        cache.act.push_back(cur);
    }
    return (cur * weights_.back().transpose()).rowwise() + biases_.back().transpose();
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_output,
                   Mlp& grads) const {
    const int L = shape_.hidden_layers;
    const Eigen::MatrixXd& last_act =
        L > 0 ? cache.act.back() : cache.input;
    grads.weights_.back() += grad_output.transpose() * last_act;
    grads.biases_.back() += grad_output.colwise().sum().transpose();

    Eigen::MatrixXd grad_act = grad_output * weights_.back();
    for (int l = L - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        const Eigen::MatrixXd grad_pre =
            grad_act.cwiseProduct(cache.pre[ul].unaryExpr([](double z) { return silu_prime(z); }));
        const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.act[ul - 1];
        grads.weights_[ul] += grad_pre.transpose() * below;
        grads.biases_[ul] += grad_pre.colwise().sum().transpose();
        if (l > 0) grad_act = grad_pre * weights_[ul];
    }
}

Eigen::Index Mlp::parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        n += weights_[l].size() + biases_[l].size();
    return n;
}

Eigen::VectorXd Mlp::parameters() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const auto& w = weights_[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) flat(at++) = w(i, j);
        const auto& b = biases_[l];
        flat.segment(at, b.size()) = b;
        at += b.size();
    }
    return flat;
}

void Mlp::set_parameters(const Eigen::VectorXd& flat) {
    require(flat.size() == parameter_count(), "flat parameter size mismatch");
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        auto& w = weights_[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat(at++);
        auto& b = biases_[l];
        b = flat.segment(at, b.size());
        at += b.size();
    }
}

void Mlp::set_zero() {
    for (auto& w : weights_) w.setZero();
    for (auto& b : biases_) b.setZero();
}

}  // namespace riskplan
