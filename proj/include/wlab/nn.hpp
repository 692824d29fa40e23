#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wlab/rng.hpp"
#include "wlab/tensor.hpp"

namespace wlab {

// Trainable tensor plus its Adam state.
struct Parameter {
    Tensor value;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step = 0;

    explicit Parameter(Tensor v)
        : value(std::move(v)),
          first_moment(value.size(), 0.0),
          second_moment(value.size(), 0.0) {}
};

// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected) on each
// parameter, then clears the gradients. Throws if any gradient is missing.
void adam_step(const std::vector<Parameter*>& params, double learning_rate);

enum class Activation { identity, tanh_fn, relu_fn, sigmoid_fn };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

// Fully connected layer, Glorot-uniform weight init, zero bias.
class DenseLayer {
public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation activation,
               RandomStream& init_rng);

    Tensor forward(const Tensor& x) const;

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    Activation activation() const { return activation_; }

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }
    const Parameter& weight() const { return weight_; }
    const Parameter& bias() const { return bias_; }

    void collect_params(std::vector<Parameter*>& out);

private:
    std::size_t in_dim_, out_dim_;
    Activation activation_;
    Parameter weight_;
    Parameter bias_;
};

// Stack of dense layers applied in order.
class Mlp {
public:
    Mlp() = default;

    void push_layer(std::size_t in_dim, std::size_t out_dim, Activation act,
                    RandomStream& init_rng) {
        layers_.emplace_back(in_dim, out_dim, act, init_rng);
    }

    Tensor forward(Tensor x) const {
        for (const DenseLayer& l : layers_) x = l.forward(x);
        return x;
    }

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    bool empty() const { return layers_.empty(); }

    void collect_params(std::vector<Parameter*>& out) {
        for (DenseLayer& l : layers_) l.collect_params(out);
    }

private:
    std::vector<DenseLayer> layers_;
};

}  // namespace wlab
