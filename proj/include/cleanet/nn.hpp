#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"

#include <json.hpp>

namespace cleanet {

enum class Activation { relu, sigmoid, identity };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::identity: return "identity";
    }
    return "identity";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "identity") return Activation::identity;
    throw parse_error("unknown activation '" + s + "'");
}

/// Fully connected layer computing act(x W + b) row-wise. The layer carries
/// its own tape: forward(x, true) caches the input and pre-activation, and
/// backward() accumulates parameter gradients until zero_grads().
class DenseLayer {
public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act)
        : in_dim_(in_dim),
          out_dim_(out_dim),
          act_(act),
          weight_(in_dim, out_dim),
          bias_(out_dim, 0.0),
          grad_weight_(in_dim, out_dim),
          grad_bias_(out_dim, 0.0) {}

    /// Scaled-uniform init, U[-sqrt(6/(fan_in+fan_out)), +...], zero biases.
    void init(std::mt19937& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in_dim_ + out_dim_));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : weight_.data) w = dist(rng);
        std::fill(bias_.begin(), bias_.end(), 0.0);
    }

    Matrix forward(const Matrix& x, bool training) {
        if (x.cols != in_dim_)
            throw dimension_error("dense forward: input has " + std::to_string(x.cols) +
                                  " columns, layer expects " + std::to_string(in_dim_));
        Matrix pre = matmul(x, weight_);
        for (std::size_t i = 0; i < pre.rows; ++i)
            for (std::size_t j = 0; j < out_dim_; ++j) pre(i, j) += bias_[j];
        Matrix out = pre;
        apply_activation(out);
        if (training) {
            input_cache_ = x;
            preact_cache_ = std::move(pre);
            has_cache_ = true;
        }
        return out;
    }

    /// Accumulates dL/dW and dL/db from the cached forward pass; returns
    /// dL/dinput.
    Matrix backward(const Matrix& upstream) {
        if (!has_cache_)
            throw state_error("dense backward called before a training forward pass");
        if (upstream.rows != preact_cache_.rows || upstream.cols != out_dim_)
            throw dimension_error("dense backward: upstream gradient shape mismatch");

        Matrix grad_pre = upstream;
        switch (act_) {
            case Activation::relu:
                for (std::size_t i = 0; i < grad_pre.size(); ++i)
                    if (preact_cache_.data[i] <= 0.0) grad_pre.data[i] = 0.0;
                break;
            case Activation::sigmoid:
                for (std::size_t i = 0; i < grad_pre.size(); ++i) {
                    const double s = sigmoid(preact_cache_.data[i]);
                    grad_pre.data[i] *= s * (1.0 - s);
                }
                break;
            case Activation::identity:
                break;
        }

        const Matrix gw = matmul_tn(input_cache_, grad_pre);
        for (std::size_t i = 0; i < gw.size(); ++i) grad_weight_.data[i] += gw.data[i];
        for (std::size_t i = 0; i < grad_pre.rows; ++i)
            for (std::size_t j = 0; j < out_dim_; ++j) grad_bias_[j] += grad_pre(i, j);

        return matmul_nt(grad_pre, weight_);
    }

    void zero_grads() {
        std::fill(grad_weight_.data.begin(), grad_weight_.data.end(), 0.0);
        std::fill(grad_bias_.begin(), grad_bias_.end(), 0.0);
    }

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    Activation activation() const { return act_; }
    std::size_t param_count() const { return in_dim_ * out_dim_ + out_dim_; }

    Matrix& weight() { return weight_; }
    const Matrix& weight() const { return weight_; }
    std::vector<double>& bias() { return bias_; }
    const std::vector<double>& bias() const { return bias_; }
    Matrix& grad_weight() { return grad_weight_; }
    std::vector<double>& grad_bias() { return grad_bias_; }

    nlohmann::json to_json() const {
        return nlohmann::json{{"in", in_dim_},
                              {"out", out_dim_},
                              {"activation", to_string(act_)},
                              {"weight", weight_.data},
                              {"bias", bias_}};
    }

    static DenseLayer from_json(const nlohmann::json& j) {
        DenseLayer layer(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                         activation_from_string(j.at("activation").get<std::string>()));
        layer.weight_.data = j.at("weight").get<std::vector<double>>();
        layer.bias_ = j.at("bias").get<std::vector<double>>();
        if (layer.weight_.data.size() != layer.in_dim_ * layer.out_dim_ ||
            layer.bias_.size() != layer.out_dim_)
            throw parse_error("checkpoint layer has inconsistent parameter sizes");
        return layer;
    }

private:
    void apply_activation(Matrix& m) const {
        switch (act_) {
            case Activation::relu:
                for (double& v : m.data) v = v > 0.0 ? v : 0.0;
                break;
            case Activation::sigmoid:
                for (double& v : m.data) v = sigmoid(v);
                break;
            case Activation::identity:
                break;
        }
    }

    std::size_t in_dim_;
    std::size_t out_dim_;
    Activation act_;
    Matrix weight_;
    std::vector<double> bias_;
    Matrix grad_weight_;
    std::vector<double> grad_bias_;
    Matrix input_cache_;
    Matrix preact_cache_;
    bool has_cache_ = false;
};

/// One (value, gradient) pair registered with the optimizer.
struct ParamBlock {
    std::vector<double>* value = nullptr;
    std::vector<double>* grad = nullptr;
};

enum class OptMethod { sgd, adam };

/// SGD or bias-corrected Adam over registered parameter blocks. Fails fast
/// on non-finite gradients.
class Optimizer {
public:
    explicit Optimizer(OptMethod method = OptMethod::adam, double lr = 1e-3,
                       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : method_(method), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void register_blocks(const std::vector<ParamBlock>& blocks) {
        blocks_ = blocks;
        if (method_ == OptMethod::adam) {
            m_.clear();
            v_.clear();
            for (const ParamBlock& b : blocks_) {
                m_.emplace_back(b.value->size(), 0.0);
                v_.emplace_back(b.value->size(), 0.0);
            }
        }
        step_count_ = 0;
    }

    void step() {
        ++step_count_;
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
            std::vector<double>& p = *blocks_[bi].value;
            const std::vector<double>& g = *blocks_[bi].grad;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (!std::isfinite(g[i]))
                    throw training_error("non-finite gradient encountered at step " +
                                         std::to_string(step_count_));
                if (method_ == OptMethod::sgd) {
                    p[i] -= lr_ * g[i];
                } else {
                    double& m = m_[bi][i];
                    double& v = v_[bi][i];
                    m = beta1_ * m + (1.0 - beta1_) * g[i];
                    v = beta2_ * v + (1.0 - beta2_) * g[i] * g[i];
                    const double mhat = m / (1.0 - std::pow(beta1_, step_count_));
                    const double vhat = v / (1.0 - std::pow(beta2_, step_count_));
                    p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
                }
            }
        }
    }

    double learning_rate() const { return lr_; }
    OptMethod method() const { return method_; }
    long step_count() const { return step_count_; }

private:
    OptMethod method_;
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    long step_count_ = 0;
    std::vector<ParamBlock> blocks_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

inline OptMethod opt_method_from_string(const std::string& s) {
    if (s == "sgd") return OptMethod::sgd;
    if (s == "adam") return OptMethod::adam;
    throw config_error("unknown optimizer '" + s + "' (expected sgd or adam)");
}

} // namespace cleanet
