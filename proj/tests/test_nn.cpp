#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "wlab/errors.hpp"
#include "wlab/nn.hpp"

using namespace wlab;

TEST_CASE("dense layer with identity weights copies its input") {
    RandomStream rng(1);
    DenseLayer layer(4, 4, Activation::identity, rng);
    auto& w = layer.weight().value.values_mut();
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 1.0;

    Tensor x = Tensor::from_data({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(layer.forward(x).values() == x.values());
}

TEST_CASE("same init seed gives bit-identical weights") {
    RandomStream a(99), b(99);
    DenseLayer la(16, 8, Activation::tanh_fn, a);
    DenseLayer lb(16, 8, Activation::tanh_fn, b);
    CHECK(la.weight().value.values() == lb.weight().value.values());
    CHECK(la.bias().value.values() == lb.bias().value.values());
}

TEST_CASE("glorot init stays inside its bound, bias starts at zero") {
    RandomStream rng(3);
    DenseLayer layer(10, 6, Activation::relu_fn, rng);
    const double bound = std::sqrt(6.0 / (10 + 6));
    for (double w : layer.weight().value.values()) {
        CHECK(w <= bound);
        CHECK(w >= -bound);
    }
    for (double b : layer.bias().value.values()) CHECK(b == 0.0);
}

TEST_CASE("layer gradients match finite differences") {
    RandomStream rng(17);
    DenseLayer layer(5, 3, Activation::tanh_fn, rng);
    std::vector<double> xv(2 * 5);
    for (double& v : xv) v = rng.uniform(-1.0, 1.0);
    Tensor x = Tensor::from_data({2, 5}, std::move(xv), true);

    std::vector<Tensor> leaves{x, layer.weight().value, layer.bias().value};
    auto fn = [&] { return sum(multiply(layer.forward(x), layer.forward(x))); };
    CHECK(testutil::max_gradcheck_error(fn, leaves) < 1e-4);
}

TEST_CASE("first adam step moves by about the learning rate") {
    Parameter p(Tensor::from_data({1}, {0.0}, true));
    backward(multiply(p.value, Tensor::scalar(3.0)));  // grad = 3
    std::vector<Parameter*> params{&p};
    adam_step(params, 0.05);
    CHECK(std::fabs(std::fabs(p.value.values()[0]) - 0.05) < 1e-6);
}

TEST_CASE("zero gradient leaves the parameter unchanged") {
    Parameter p(Tensor::from_data({2}, {1.5, -2.5}, true));
    backward(sum(multiply(p.value, Tensor::zeros({2}))));
    std::vector<Parameter*> params{&p};
    adam_step(params, 0.1);
    CHECK(p.value.values() == std::vector<double>{1.5, -2.5});
}

TEST_CASE("adam without a gradient is an error") {
    Parameter p(Tensor::from_data({2}, {1.0, 2.0}, true));
    std::vector<Parameter*> params{&p};
    CHECK_THROWS_AS(adam_step(params, 0.1), ValueError);
}

TEST_CASE("adam drives (w - 3)^2 close to its minimum in 100 steps") {
    Parameter w(Tensor::from_data({1}, {0.0}, true));
    std::vector<Parameter*> params{&w};
    for (int step = 0; step < 100; ++step) {
        Tensor diff = add_scalar(w.value, -3.0);
        backward(multiply(diff, diff));
        adam_step(params, 0.1);
    }
    CHECK(std::fabs(w.value.values()[0] - 3.0) < 0.1);
}

TEST_CASE("adam_step clears gradients so stale steps fail fast") {
    Parameter p(Tensor::from_data({1}, {1.0}, true));
    backward(multiply(p.value, p.value));
    std::vector<Parameter*> params{&p};
    adam_step(params, 0.01);
    CHECK_FALSE(p.value.has_grad());
    CHECK_THROWS_AS(adam_step(params, 0.01), ValueError);
}

TEST_CASE("mlp chains layers and exposes parameters in order") {
    RandomStream rng(5);
    Mlp mlp;
    mlp.push_layer(4, 3, Activation::tanh_fn, rng);
    mlp.push_layer(3, 2, Activation::identity, rng);
    std::vector<Parameter*> params;
    mlp.collect_params(params);
    CHECK(params.size() == 4);

    Tensor x = Tensor::zeros({1, 4});
    Tensor y = mlp.forward(x);
    CHECK(y.shape() == std::vector<std::size_t>{1, 2});
    CHECK(y.values() == std::vector<double>{0.0, 0.0});  // zero in, zero bias
}
