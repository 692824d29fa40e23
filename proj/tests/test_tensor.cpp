#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "wlab/errors.hpp"
#include "wlab/rng.hpp"
#include "wlab/tensor.hpp"

using namespace wlab;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, RandomStream& rng,
                     bool requires_grad, double lo = -2.0, double hi = 2.0) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("matmul identity") {
    RandomStream rng(7);
    Tensor a = random_tensor({3, 3}, rng, false);
    std::vector<double> eye(9, 0.0);
    eye[0] = eye[4] = eye[8] = 1.0;
    Tensor i3 = Tensor::from_data({3, 3}, eye);
    Tensor out = matmul(i3, a);
    for (std::size_t k = 0; k < 9; ++k)
        CHECK(out.values()[k] == doctest::Approx(a.values()[k]).epsilon(1e-15));
}

TEST_CASE("pointwise fixed values") {
    Tensor zero = Tensor::zeros({4});
    CHECK(tanh(zero).values() == std::vector<double>(4, 0.0));
    CHECK(sigmoid(zero).values() == std::vector<double>(4, 0.5));
    CHECK(relu(Tensor::from_data({2}, {-1.0, 2.0})).values() ==
          std::vector<double>{0.0, 2.0});
    CHECK(exp(Tensor::scalar(0.0)).item() == 1.0);
    CHECK(log(Tensor::scalar(1.0)).item() == 0.0);
    CHECK(abs(Tensor::from_data({2}, {-3.0, 4.0})).values() ==
          std::vector<double>{3.0, 4.0});
    CHECK(pow(Tensor::scalar(2.0), 3.0).item() == 8.0);
}

TEST_CASE("shape mismatches are rejected with diagnostics") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 2});
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    CHECK_THROWS_AS(add(a, b), ShapeError);
    CHECK_THROWS_AS(multiply(a, Tensor::zeros({4})), ShapeError);
    CHECK_THROWS_AS(pairwise_sqdist(a, Tensor::zeros({2, 2})), ShapeError);
    CHECK_THROWS_AS(slice(a, 0, 1, 4), ShapeError);
    CHECK_THROWS_AS(concat({a, b}, 0), ShapeError);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), ShapeError);
}

TEST_CASE("backward of sum(x*x) doubles the input") {
    Tensor x = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
    backward(sum(multiply(x, x)));
    CHECK(x.grad() == std::vector<double>{2.0, 4.0, 6.0});
}

TEST_CASE("backward of mean spreads 1/n") {
    Tensor x = Tensor::from_data({4}, {5.0, -1.0, 2.0, 0.5}, true);
    backward(mean(x));
    CHECK(x.grad() == std::vector<double>(4, 0.25));
}

TEST_CASE("backward requires a scalar root") {
    Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
    CHECK_THROWS_AS(backward(multiply(x, x)), ShapeError);
}

TEST_CASE("repeated backward accumulates leaf gradients") {
    Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
    Tensor loss = sum(multiply(x, x));
    backward(loss);
    backward(loss);
    CHECK(x.grad() == std::vector<double>{4.0, 8.0});
    x.zero_grad();
    backward(loss);
    CHECK(x.grad() == std::vector<double>{2.0, 4.0});
}

TEST_CASE("broadcast-add backward sums over the broadcast axis") {
    RandomStream rng(11);
    Tensor x = random_tensor({5, 3}, rng, false);
    Tensor b = random_tensor({3}, rng, true);

    backward(sum(multiply(add(x, b), add(x, b))));
    const std::vector<double> via_broadcast = b.grad();
    b.zero_grad();

    // explicit tiling of b over the batch axis
    std::vector<double> tiled(15);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) tiled[r * 3 + c] = b.values()[c];
    Tensor bt = Tensor::from_data({5, 3}, std::move(tiled), true);
    backward(sum(multiply(add(x, bt), add(x, bt))));
    for (std::size_t c = 0; c < 3; ++c) {
        double col = 0.0;
        for (std::size_t r = 0; r < 5; ++r) col += bt.grad()[r * 3 + c];
        CHECK(via_broadcast[c] == doctest::Approx(col).epsilon(1e-12));
    }
}

TEST_CASE("determinism: same seed, same op sequence, bit-identical results") {
    auto run = [] {
        RandomStream rng(123);
        Tensor a = random_tensor({4, 3}, rng, true);
        Tensor b = random_tensor({3, 2}, rng, true);
        Tensor loss = sum(sigmoid(matmul(a, b)));
        backward(loss);
        return std::tuple{loss.item(), a.grad(), b.grad()};
    };
    const auto [l1, ga1, gb1] = run();
    const auto [l2, ga2, gb2] = run();
    CHECK(l1 == l2);
    CHECK(ga1 == ga2);
    CHECK(gb1 == gb2);
}

TEST_CASE("concat and slice round data through both axes") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_data({1, 2}, {5, 6});
    Tensor rows = concat({a, b}, 0);
    CHECK(rows.shape() == std::vector<std::size_t>{3, 2});
    CHECK(rows.values() == std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(slice(rows, 0, 2, 3).values() == std::vector<double>{5, 6});

    Tensor c = Tensor::from_data({2, 1}, {7, 8});
    Tensor cols = concat({a, c}, 1);
    CHECK(cols.shape() == std::vector<std::size_t>{2, 3});
    CHECK(cols.values() == std::vector<double>{1, 2, 7, 3, 4, 8});
    CHECK(slice(cols, 1, 2, 3).values() == std::vector<double>{7, 8});
}

TEST_CASE("pairwise_sqdist matches direct distances") {
    RandomStream rng(5);
    Tensor x = random_tensor({4, 3}, rng, false);
    Tensor y = random_tensor({2, 3}, rng, false);
    Tensor d = pairwise_sqdist(x, y);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            double want = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                const double diff = x.values()[i * 3 + k] - y.values()[j * 3 + k];
                want += diff * diff;
            }
            CHECK(d.values()[i * 2 + j] == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("per-op gradients match central finite differences") {
    RandomStream rng(42);
    const double tol = 1e-4;

    auto check_unary = [&](auto op, double lo, double hi) {
        Tensor x = random_tensor({3, 4}, rng, true, lo, hi);
        std::vector<Tensor> leaves{x};
        auto fn = [&] { return sum(multiply(op(x), op(x))); };
        CHECK(testutil::max_gradcheck_error(fn, leaves) < tol);
    };
    check_unary([](const Tensor& t) { return tanh(t); }, -2.0, 2.0);
    check_unary([](const Tensor& t) { return sigmoid(t); }, -2.0, 2.0);
    check_unary([](const Tensor& t) { return exp(t); }, -1.0, 1.0);
    check_unary([](const Tensor& t) { return log(t); }, 0.5, 3.0);
    check_unary([](const Tensor& t) { return relu(t); }, 0.2, 2.0);
    check_unary([](const Tensor& t) { return abs(t); }, 0.2, 2.0);
    check_unary([](const Tensor& t) { return pow(t, 2.5); }, 0.5, 2.0);

    SUBCASE("matmul") {
        Tensor a = random_tensor({3, 4}, rng, true);
        Tensor b = random_tensor({4, 2}, rng, true);
        std::vector<Tensor> leaves{a, b};
        auto fn = [&] { return sum(tanh(matmul(a, b))); };
        CHECK(testutil::max_gradcheck_error(fn, leaves) < tol);
    }
    SUBCASE("add and multiply with broadcasts") {
        Tensor a = random_tensor({3, 4}, rng, true);
        Tensor row = random_tensor({4}, rng, true);
        Tensor s = random_tensor({1}, rng, true);
        std::vector<Tensor> leaves{a, row, s};
        auto fn = [&] {
            return sum(multiply(add(multiply(a, row), s), add(a, row)));
        };
        CHECK(testutil::max_gradcheck_error(fn, leaves) < tol);
    }
    SUBCASE("pairwise_sqdist both sides") {
        Tensor x = random_tensor({4, 3}, rng, true);
        Tensor y = random_tensor({3, 3}, rng, true);
        std::vector<Tensor> leaves{x, y};
        auto fn = [&] { return sum(tanh(pairwise_sqdist(x, y))); };
        CHECK(testutil::max_gradcheck_error(fn, leaves) < tol);
    }
    SUBCASE("pairwise_sqdist with itself") {
        Tensor x = random_tensor({4, 3}, rng, true);
        std::vector<Tensor> leaves{x};
        auto fn = [&] { return sum(tanh(pairwise_sqdist(x, x))); };
        CHECK(testutil::max_gradcheck_error(fn, leaves) < tol);
    }
    SUBCASE("concat and slice") {
        Tensor a = random_tensor({2, 3}, rng, true);
        Tensor b = random_tensor({2, 3}, rng, true);
        std::vector<Tensor> leaves{a, b};
        auto fn = [&] {
            Tensor j = concat({a, b}, 0);
            return sum(multiply(slice(j, 0, 1, 3), slice(j, 0, 0, 2)));
        };
        CHECK(testutil::max_gradcheck_error(fn, leaves) < tol);
    }
    SUBCASE("sum and mean") {
        Tensor a = random_tensor({5}, rng, true);
        std::vector<Tensor> leaves{a};
        auto fn = [&] { return add(sum(multiply(a, a)), mean(exp(a))); };
        CHECK(testutil::max_gradcheck_error(fn, leaves) < tol);
    }
    SUBCASE("clamp passes gradient only inside the band") {
        Tensor a = Tensor::from_data({3}, {-5.0, 0.5, 7.0}, true);
        backward(sum(clamp(a, -2.0, 2.0)));
        CHECK(a.grad() == std::vector<double>{0.0, 1.0, 0.0});
        CHECK(clamp(a, -2.0, 2.0).values() == std::vector<double>{-2.0, 0.5, 2.0});
    }
}

TEST_CASE("no-grad guard keeps results off the tape") {
    Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
    NoGradGuard ng;
    Tensor y = sum(multiply(x, x));
    CHECK_FALSE(y.requires_grad());
    CHECK(y.op() == OpKind::leaf);
}
