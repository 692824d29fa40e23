#include "wlab/nn.hpp"

#include <cmath>

#include "wlab/errors.hpp"

namespace wlab {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

Tensor glorot_uniform(std::size_t in_dim, std::size_t out_dim,
                      RandomStream& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    std::vector<double> w(in_dim * out_dim);
    for (double& v : w) v = rng.uniform(-a, a);
    return Tensor::from_data({in_dim, out_dim}, std::move(w), true);
}

}  // namespace

void adam_step(const std::vector<Parameter*>& params, double learning_rate) {
    for (Parameter* p : params)
        if (!p->value.has_grad())
            throw ValueError("adam_step: parameter has no gradient");

    for (Parameter* p : params) {
        const std::vector<double>& g = p->value.grad();
        std::vector<double>& w = p->value.values_mut();
        p->step += 1;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(p->step));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(p->step));
        for (std::size_t i = 0; i < w.size(); ++i) {
            p->first_moment[i] = kBeta1 * p->first_moment[i] + (1.0 - kBeta1) * g[i];
            p->second_moment[i] =
                kBeta2 * p->second_moment[i] + (1.0 - kBeta2) * g[i] * g[i];
            const double m_hat = p->first_moment[i] / bc1;
            const double v_hat = p->second_moment[i] / bc2;
            w[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kEps);
        }
        p->value.zero_grad();
    }
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "tanh") return Activation::tanh_fn;
    if (name == "relu") return Activation::relu_fn;
    if (name == "sigmoid") return Activation::sigmoid_fn;
    throw ValueError("unknown activation: " + name);
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh_fn: return "tanh";
        case Activation::relu_fn: return "relu";
        case Activation::sigmoid_fn: return "sigmoid";
    }
    return "?";
}

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim,
                       Activation activation, RandomStream& init_rng)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      activation_(activation),
      weight_(glorot_uniform(in_dim, out_dim, init_rng)),
      bias_(Tensor::zeros({out_dim}, true)) {
    if (in_dim == 0 || out_dim == 0)
        throw ValueError("DenseLayer: dims must be positive");
}

Tensor DenseLayer::forward(const Tensor& x) const {
    Tensor z = add(matmul(x, weight_.value), bias_.value);
    switch (activation_) {
        case Activation::identity: return z;
        case Activation::tanh_fn: return tanh(z);
        case Activation::relu_fn: return relu(z);
        case Activation::sigmoid_fn: return sigmoid(z);
    }
    return z;
}

void DenseLayer::collect_params(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

}  // namespace wlab
