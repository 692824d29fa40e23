#include "wlab/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "wlab/errors.hpp"

namespace wlab {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EMat>;
using CMapMat = Eigen::Map<const EMat>;

thread_local bool g_grad_enabled = true;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << shape[i] << (i + 1 < shape.size() ? "," : "");
    os << ")";
    return os.str();
}

NodePtr make_leaf(std::vector<std::size_t> shape, std::vector<double> data,
                  bool requires_grad) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->values = std::move(data);
    n->requires_grad = requires_grad;
    return n;
}

// Result node; records inputs only when the tape is live for it.
NodePtr make_result(OpKind op, std::vector<std::size_t> shape,
                    std::vector<double> values,
                    std::initializer_list<Tensor> inputs) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    bool needs = false;
    if (g_grad_enabled)
        for (const Tensor& t : inputs) needs = needs || t.requires_grad();
    n->requires_grad = needs;
    if (needs) {
        n->op = op;
        for (const Tensor& t : inputs) n->inputs.push_back(t.node());
    }
    return n;
}

enum class Broadcast { same, a_scalar, b_scalar, b_row };

// Broadcast resolution for add/multiply: equal shapes, one scalar operand,
// or matrix ⊕ trailing-axis vector.
Broadcast resolve_broadcast(const char* what, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Broadcast::same;
    if (b.size() == 1) return Broadcast::b_scalar;
    if (a.size() == 1) return Broadcast::a_scalar;
    if (a.rank() == 2 && b.rank() == 1 && a.shape()[1] == b.shape()[0])
        return Broadcast::b_row;
    throw ShapeError(std::string(what) + ": cannot broadcast " +
                     shape_str(a.shape()) + " with " + shape_str(b.shape()));
}

std::vector<double>& ensure_grad(TensorNode& n) {
    if (!n.grad) n.grad.emplace(n.size(), 0.0);
    return *n.grad;
}

Tensor unary_map(OpKind op, const Tensor& x, double (*f)(double)) {
    std::vector<double> out(x.size());
    const auto& v = x.values();
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
    return Tensor(make_result(op, x.shape(), std::move(out), {x}));
}

}  // namespace

const char* op_name(OpKind op) {
    switch (op) {
        case OpKind::leaf: return "leaf";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::multiply: return "multiply";
        case OpKind::tanh_fn: return "tanh";
        case OpKind::relu_fn: return "relu";
        case OpKind::sigmoid_fn: return "sigmoid";
        case OpKind::exp_fn: return "exp";
        case OpKind::log_fn: return "log";
        case OpKind::sum_all: return "sum";
        case OpKind::mean_all: return "mean";
        case OpKind::abs_fn: return "abs";
        case OpKind::power: return "power";
        case OpKind::concat: return "concat";
        case OpKind::slice_op: return "slice";
        case OpKind::pairwise_sqdist: return "pairwise_sqdist";
    }
    return "?";
}

Tensor::Tensor() : node_(make_leaf({0}, {}, false)) {}
Tensor::Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = shape_product(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0),
                            requires_grad));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value,
                    bool requires_grad) {
    std::size_t n = shape_product(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value),
                            requires_grad));
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
    if (shape_product(shape) != data.size())
        throw ShapeError("from_data: shape " + shape_str(shape) + " wants " +
                         std::to_string(shape_product(shape)) + " values, got " +
                         std::to_string(data.size()));
    return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(make_leaf({1}, {value}, requires_grad));
}

double Tensor::item() const {
    if (!is_scalar())
        throw ShapeError("item: tensor of shape " + shape_str(shape()) +
                         " is not scalar");
    return node_->values[0];
}

const std::vector<double>& Tensor::grad() const {
    if (!node_->grad)
        throw ValueError("grad: no gradient present (call backward first)");
    return *node_->grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

// --- forward ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul: need rank-2 operands, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t n = a.shape()[0], k = a.shape()[1];
    const std::size_t k2 = b.shape()[0], m = b.shape()[1];
    if (k != k2)
        throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
    std::vector<double> out(n * m);
    CMapMat ma(a.values().data(), n, k), mb(b.values().data(), k, m);
    MapMat(out.data(), n, m).noalias() = ma * mb;
    return Tensor(make_result(OpKind::matmul, {n, m}, std::move(out), {a, b}));
}

Tensor add(const Tensor& a, const Tensor& b) {
    const Broadcast bc = resolve_broadcast("add", a, b);
    const auto& va = a.values();
    const auto& vb = b.values();
    std::vector<double> out;
    std::vector<std::size_t> shape;
    switch (bc) {
        case Broadcast::same:
            shape = a.shape();
            out.resize(va.size());
            for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] + vb[i];
            break;
        case Broadcast::b_scalar:
            shape = a.shape();
            out.resize(va.size());
            for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] + vb[0];
            break;
        case Broadcast::a_scalar:
            shape = b.shape();
            out.resize(vb.size());
            for (std::size_t i = 0; i < vb.size(); ++i) out[i] = va[0] + vb[i];
            break;
        case Broadcast::b_row: {
            shape = a.shape();
            const std::size_t rows = shape[0], cols = shape[1];
            out.resize(va.size());
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    out[r * cols + c] = va[r * cols + c] + vb[c];
            break;
        }
    }
    return Tensor(make_result(OpKind::add, std::move(shape), std::move(out), {a, b}));
}

Tensor multiply(const Tensor& a, const Tensor& b) {
    const Broadcast bc = resolve_broadcast("multiply", a, b);
    const auto& va = a.values();
    const auto& vb = b.values();
    std::vector<double> out;
    std::vector<std::size_t> shape;
    switch (bc) {
        case Broadcast::same:
            shape = a.shape();
            out.resize(va.size());
            for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * vb[i];
            break;
        case Broadcast::b_scalar:
            shape = a.shape();
            out.resize(va.size());
            for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * vb[0];
            break;
        case Broadcast::a_scalar:
            shape = b.shape();
            out.resize(vb.size());
            for (std::size_t i = 0; i < vb.size(); ++i) out[i] = va[0] * vb[i];
            break;
        case Broadcast::b_row: {
            shape = a.shape();
            const std::size_t rows = shape[0], cols = shape[1];
            out.resize(va.size());
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    out[r * cols + c] = va[r * cols + c] * vb[c];
            break;
        }
    }
    return Tensor(
        make_result(OpKind::multiply, std::move(shape), std::move(out), {a, b}));
}

Tensor tanh(const Tensor& x) {
    return unary_map(OpKind::tanh_fn, x, [](double v) { return std::tanh(v); });
}

Tensor relu(const Tensor& x) {
    return unary_map(OpKind::relu_fn, x,
                     [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_map(OpKind::sigmoid_fn, x, [](double v) {
        // split on sign so neither branch overflows
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Tensor exp(const Tensor& x) {
    return unary_map(OpKind::exp_fn, x, [](double v) { return std::exp(v); });
}

Tensor log(const Tensor& x) {
    return unary_map(OpKind::log_fn, x, [](double v) { return std::log(v); });
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    return Tensor(make_result(OpKind::sum_all, {1}, {acc}, {x}));
}

Tensor mean(const Tensor& x) {
    if (x.size() == 0) throw ShapeError("mean: empty tensor");
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    return Tensor(make_result(OpKind::mean_all, {1},
                              {acc / static_cast<double>(x.size())}, {x}));
}

Tensor abs(const Tensor& x) {
    return unary_map(OpKind::abs_fn, x, [](double v) { return std::fabs(v); });
}

Tensor pow(const Tensor& x, double exponent) {
    std::vector<double> out(x.size());
    const auto& v = x.values();
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::pow(v[i], exponent);
    auto node = make_result(OpKind::power, x.shape(), std::move(out), {x});
    node->scalar_attr = exponent;
    return Tensor(node);
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const std::size_t rank = parts[0].rank();
    if (axis >= rank) throw ShapeError("concat: axis out of range");
    for (const Tensor& p : parts) {
        if (p.rank() != rank) throw ShapeError("concat: mixed ranks");
        for (std::size_t d = 0; d < rank; ++d)
            if (d != axis && p.shape()[d] != parts[0].shape()[d])
                throw ShapeError("concat: shape " + shape_str(p.shape()) +
                                 " differs from " + shape_str(parts[0].shape()) +
                                 " off axis " + std::to_string(axis));
    }
    if (rank > 2) throw ShapeError("concat: rank > 2 unsupported");

    std::vector<std::size_t> shape = parts[0].shape();
    std::size_t total = 0;
    for (const Tensor& p : parts) total += p.shape()[axis];
    shape[axis] = total;

    std::vector<double> out(shape_product(shape));
    std::vector<std::size_t> offsets;
    if (axis == 0 || rank == 1) {
        std::size_t pos = 0;
        for (const Tensor& p : parts) {
            offsets.push_back(pos);
            std::copy(p.values().begin(), p.values().end(), out.begin() + pos);
            pos += p.values().size();
        }
    } else {
        const std::size_t rows = shape[0];
        std::size_t col_pos = 0;
        for (const Tensor& p : parts) {
            offsets.push_back(col_pos);
            const std::size_t pc = p.shape()[1];
            for (std::size_t r = 0; r < rows; ++r)
                std::copy(p.values().begin() + r * pc,
                          p.values().begin() + (r + 1) * pc,
                          out.begin() + r * shape[1] + col_pos);
            col_pos += pc;
        }
    }

    auto node = std::make_shared<TensorNode>();
    node->shape = shape;
    node->values = std::move(out);
    bool needs = false;
    if (g_grad_enabled)
        for (const Tensor& p : parts) needs = needs || p.requires_grad();
    node->requires_grad = needs;
    if (needs) {
        node->op = OpKind::concat;
        for (const Tensor& p : parts) node->inputs.push_back(p.node());
        node->axis = axis;
        node->part_offsets = std::move(offsets);
    }
    return Tensor(node);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    if (axis >= x.rank()) throw ShapeError("slice: axis out of range");
    if (x.rank() > 2) throw ShapeError("slice: rank > 2 unsupported");
    const std::size_t extent = x.shape()[axis];
    if (begin > end || end > extent)
        throw ShapeError("slice: range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") outside extent " +
                         std::to_string(extent));
    std::vector<std::size_t> shape = x.shape();
    shape[axis] = end - begin;

    std::vector<double> out;
    if (axis == 0 && x.rank() == 2) {
        const std::size_t cols = x.shape()[1];
        out.assign(x.values().begin() + begin * cols,
                   x.values().begin() + end * cols);
    } else if (x.rank() == 1) {
        out.assign(x.values().begin() + begin, x.values().begin() + end);
    } else {  // axis == 1
        const std::size_t rows = x.shape()[0], cols = x.shape()[1];
        out.reserve(rows * (end - begin));
        for (std::size_t r = 0; r < rows; ++r)
            out.insert(out.end(), x.values().begin() + r * cols + begin,
                       x.values().begin() + r * cols + end);
    }

    auto node = make_result(OpKind::slice_op, std::move(shape), std::move(out), {x});
    node->axis = axis;
    node->begin = begin;
    node->end = end;
    return Tensor(node);
}

Tensor pairwise_sqdist(const Tensor& x, const Tensor& y) {
    if (x.rank() != 2 || y.rank() != 2 || x.shape()[1] != y.shape()[1])
        throw ShapeError("pairwise_sqdist: need n x d and m x d, got " +
                         shape_str(x.shape()) + " and " + shape_str(y.shape()));
    const std::size_t n = x.shape()[0], m = y.shape()[0], d = x.shape()[1];
    std::vector<double> out(n * m);
    CMapMat mx(x.values().data(), n, d), my(y.values().data(), m, d);
    MapMat mo(out.data(), n, m);
    mo.noalias() = -2.0 * (mx * my.transpose());
    const Eigen::VectorXd xs = mx.rowwise().squaredNorm();
    const Eigen::VectorXd ys = my.rowwise().squaredNorm();
    mo.colwise() += xs;
    mo.rowwise() += ys.transpose();
    return Tensor(
        make_result(OpKind::pairwise_sqdist, {n, m}, std::move(out), {x, y}));
}

Tensor scale(const Tensor& x, double k) { return multiply(x, Tensor::scalar(k)); }

Tensor add_scalar(const Tensor& x, double k) { return add(x, Tensor::scalar(k)); }

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor clamp(const Tensor& x, double lo, double hi) {
    if (lo > hi) throw ValueError("clamp: lo > hi");
    // lo + relu(x - lo) - relu(x - hi); pass-through gradient inside the band
    Tensor shifted = relu(add_scalar(x, -lo));
    Tensor over = relu(add_scalar(x, -hi));
    return add_scalar(sub(shifted, over), lo);
}

// --- backward --------------------------------------------------------------

namespace {

void backward_into_inputs(TensorNode& n) {
    const std::vector<double>& g = *n.grad;
    switch (n.op) {
        case OpKind::leaf:
            return;
        case OpKind::matmul: {
            TensorNode& a = *n.inputs[0];
            TensorNode& b = *n.inputs[1];
            const std::size_t rows = a.shape[0], inner = a.shape[1],
                              cols = b.shape[1];
            CMapMat mg(g.data(), rows, cols);
            CMapMat ma(a.values.data(), rows, inner);
            CMapMat mb(b.values.data(), inner, cols);
            if (a.requires_grad)
                MapMat(ensure_grad(a).data(), rows, inner).noalias() +=
                    mg * mb.transpose();
            if (b.requires_grad)
                MapMat(ensure_grad(b).data(), inner, cols).noalias() +=
                    ma.transpose() * mg;
            return;
        }
        case OpKind::add:
        case OpKind::multiply: {
            TensorNode& a = *n.inputs[0];
            TensorNode& b = *n.inputs[1];
            const bool is_mul = n.op == OpKind::multiply;
            auto side_grad = [&](TensorNode& self, TensorNode& other) {
                if (!self.requires_grad) return;
                std::vector<double>& dst = ensure_grad(self);
                // contribution of g times (other's value for multiply, 1 for add),
                // reduced over whatever axes were broadcast
                auto factor = [&](std::size_t out_idx) {
                    if (!is_mul) return 1.0;
                    if (other.size() == 1) return other.values[0];
                    if (other.size() == n.size()) return other.values[out_idx];
                    // other is a row vector under b_row broadcast
                    const std::size_t cols = n.shape[1];
                    return other.values[out_idx % cols];
                };
                if (self.size() == n.size()) {
                    for (std::size_t i = 0; i < g.size(); ++i)
                        dst[i] += g[i] * factor(i);
                } else if (self.size() == 1) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        acc += g[i] * (is_mul ? other.values[i] : 1.0);
                    dst[0] += acc;
                } else {
                    // row vector broadcast over the leading batch axis
                    const std::size_t cols = n.shape[1];
                    for (std::size_t i = 0; i < g.size(); ++i)
                        dst[i % cols] += g[i] * (is_mul ? other.values[i] : 1.0);
                }
            };
            side_grad(a, b);
            side_grad(b, a);
            return;
        }
        case OpKind::tanh_fn: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i)
                dst[i] += g[i] * (1.0 - n.values[i] * n.values[i]);
            return;
        }
        case OpKind::relu_fn: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i)
                dst[i] += x.values[i] > 0.0 ? g[i] : 0.0;
            return;
        }
        case OpKind::sigmoid_fn: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i)
                dst[i] += g[i] * n.values[i] * (1.0 - n.values[i]);
            return;
        }
        case OpKind::exp_fn: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i)
                dst[i] += g[i] * n.values[i];
            return;
        }
        case OpKind::log_fn: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i)
                dst[i] += g[i] / x.values[i];
            return;
        }
        case OpKind::sum_all: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[0];
            return;
        }
        case OpKind::mean_all: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            const double w = g[0] / static_cast<double>(x.size());
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w;
            return;
        }
        case OpKind::abs_fn: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double v = x.values[i];
                dst[i] += v > 0.0 ? g[i] : (v < 0.0 ? -g[i] : 0.0);
            }
            return;
        }
        case OpKind::power: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            const double e = n.scalar_attr;
            for (std::size_t i = 0; i < g.size(); ++i)
                dst[i] += g[i] * e * std::pow(x.values[i], e - 1.0);
            return;
        }
        case OpKind::concat: {
            const std::size_t rank = n.shape.size();
            for (std::size_t p = 0; p < n.inputs.size(); ++p) {
                TensorNode& part = *n.inputs[p];
                if (!part.requires_grad) continue;
                std::vector<double>& dst = ensure_grad(part);
                const std::size_t off = n.part_offsets[p];
                if (n.axis == 0 || rank == 1) {
                    for (std::size_t i = 0; i < part.size(); ++i)
                        dst[i] += g[off + i];
                } else {
                    const std::size_t rows = n.shape[0], cols = n.shape[1];
                    const std::size_t pc = part.shape[1];
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < pc; ++c)
                            dst[r * pc + c] += g[r * cols + off + c];
                }
            }
            return;
        }
        case OpKind::slice_op: {
            TensorNode& x = *n.inputs[0];
            if (!x.requires_grad) return;
            std::vector<double>& dst = ensure_grad(x);
            if (x.shape.size() == 1 || n.axis == 0) {
                const std::size_t cols = x.shape.size() == 2 ? x.shape[1] : 1;
                const std::size_t off = n.begin * cols;
                for (std::size_t i = 0; i < g.size(); ++i) dst[off + i] += g[i];
            } else {
                const std::size_t rows = x.shape[0], cols = x.shape[1];
                const std::size_t width = n.end - n.begin;
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < width; ++c)
                        dst[r * cols + n.begin + c] += g[r * width + c];
            }
            return;
        }
        case OpKind::pairwise_sqdist: {
            TensorNode& x = *n.inputs[0];
            TensorNode& y = *n.inputs[1];
            const std::size_t rows = n.shape[0], cols = n.shape[1],
                              d = x.shape[1];
            // dD_ij/dx_i = 2 (x_i - y_j); dD_ij/dy_j = -2 (x_i - y_j)
            if (x.requires_grad) {
                std::vector<double>& dst = ensure_grad(x);
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double w = 2.0 * g[i * cols + j];
                        if (w == 0.0) continue;
                        for (std::size_t k = 0; k < d; ++k)
                            dst[i * d + k] +=
                                w * (x.values[i * d + k] - y.values[j * d + k]);
                    }
            }
            if (y.requires_grad) {
                std::vector<double>& dst = ensure_grad(y);
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double w = 2.0 * g[i * cols + j];
                        if (w == 0.0) continue;
                        for (std::size_t k = 0; k < d; ++k)
                            dst[j * d + k] -=
                                w * (x.values[i * d + k] - y.values[j * d + k]);
                    }
            }
            return;
        }
    }
}

}  // namespace

void backward(const Tensor& root) {
    if (!root.is_scalar())
        throw ShapeError("backward: root must be scalar, got shape " +
                         shape_str(root.shape()));
    if (!root.requires_grad()) return;

    // reverse topological order over the recorded subgraph
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            TensorNode* child = node->inputs[next++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // interior grads are scratch per pass; leaves accumulate across passes
    for (TensorNode* n : order)
        if (n->op != OpKind::leaf) n->grad.emplace(n->size(), 0.0);
    ensure_grad(*root.node())[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it)
        backward_into_inputs(**it);
}

}  // namespace wlab
