#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wlab {

enum class OpKind {
    leaf,
    matmul,
    add,
    multiply,
    tanh_fn,
    relu_fn,
    sigmoid_fn,
    exp_fn,
    log_fn,
    sum_all,
    mean_all,
    abs_fn,
    power,
    concat,
    slice_op,
    pairwise_sqdist,
};

const char* op_name(OpKind op);

namespace detail {

// One record on the differentiation tape: the op that produced a value,
// handles to its inputs, and the forward values the backward rule reads.
struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::optional<std::vector<double>> grad;

    OpKind op = OpKind::leaf;
    std::vector<std::shared_ptr<TensorNode>> inputs;
    double scalar_attr = 0.0;                 // power exponent
    std::size_t axis = 0;                     // concat / slice
    std::size_t begin = 0, end = 0;           // slice bounds
    std::vector<std::size_t> part_offsets;    // concat split points

    std::size_t size() const { return values.size(); }
};

}  // namespace detail

// Dense row-major tensor of 64-bit floats. Copies are cheap handles onto a
// shared node; an op whose inputs require gradients records itself on the
// implicit per-computation tape.
class Tensor {
public:
    Tensor();

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double value,
                       bool requires_grad = false);
    static Tensor from_data(std::vector<std::size_t> shape,
                            std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->values.size(); }
    bool is_scalar() const { return size() == 1; }

    const std::vector<double>& values() const { return node_->values; }
    std::vector<double>& values_mut() { return node_->values; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return node_->grad.has_value(); }
    const std::vector<double>& grad() const;
    void zero_grad() { node_->grad.reset(); }

    OpKind op() const { return node_->op; }
    bool same_node(const Tensor& other) const { return node_ == other.node_; }

    std::shared_ptr<detail::TensorNode> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::TensorNode> node);

private:
    std::shared_ptr<detail::TensorNode> node_;
};

// --- forward ops -----------------------------------------------------------
//
// add/multiply broadcast: equal shapes, a 1-element operand against any
// shape, or a trailing-axis vector against a matrix (bias over the leading
// batch axis). Everything else is a ShapeError.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor pow(const Tensor& x, double exponent);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

// n x d, m x d -> n x m matrix of squared euclidean distances between rows
Tensor pairwise_sqdist(const Tensor& x, const Tensor& y);

// sugar over the primitive set
Tensor scale(const Tensor& x, double k);
Tensor add_scalar(const Tensor& x, double k);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor clamp(const Tensor& x, double lo, double hi);

// Populates grad on every reachable tensor that requires gradients.
// root must be scalar; leaf gradients accumulate across repeated calls.
void backward(const Tensor& root);

bool grad_enabled();

// Disables tape recording in scope; ops then produce constants.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

}  // namespace wlab
