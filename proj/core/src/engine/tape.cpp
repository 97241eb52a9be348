#include "chfuq/engine/tape.hpp"

#include <cmath>

namespace chfuq::engine {

namespace {

double sigmoid_scalar(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Overflow-safe softplus: linear branch for large logits, plain exponential
// for very negative ones, log1p in between.
double softplus_scalar(double z, double beta) {
    const double bz = beta * z;
    if (bz > 30.0) return z;
    if (bz < -30.0) return std::exp(bz) / beta;
    return std::log1p(std::exp(bz)) / beta;
}

enum class Broadcast { None, Row, Scalar };

Broadcast broadcast_form(const Array& a, const Array& b) {
    if (a.same_shape(b)) return Broadcast::None;
    if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
    return Broadcast::Scalar;  // unreachable after shape check
}

}  // namespace

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Leaf: return "leaf";
        case OpKind::MatMul: return "matmul";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Div: return "div";
        case OpKind::Log: return "log";
        case OpKind::Exp: return "exp";
        case OpKind::Square: return "square";
        case OpKind::Sqrt: return "sqrt";
        case OpKind::Mean: return "mean";
        case OpKind::Sum: return "sum";
        case OpKind::ColMean: return "col_mean";
        case OpKind::Relu: return "relu";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Softplus: return "softplus";
        case OpKind::ClampMin: return "clamp_min";
        case OpKind::Scale: return "scale";
        case OpKind::AddScalar: return "add_scalar";
        case OpKind::SliceCols: return "slice_cols";
    }
    return "?";
}

std::int32_t Tape::check(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size())
        CHFUQ_THROW(Error, "tape: invalid var handle %d", v.idx);
    return v.idx;
}

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Array value, bool trainable) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = std::move(value);
    n.trainable = trainable;
    n.needs_grad = trainable;
    return push(std::move(n));
}

Var Tape::unary(OpKind kind, Var a, double c) {
    const std::int32_t ia = check(a);
    const Array& x = nodes_[ia].value;
    Node n;
    n.op = kind;
    n.args = {ia, -1};
    n.c = c;
    n.needs_grad = nodes_[ia].needs_grad;

    switch (kind) {
        case OpKind::Log: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = std::log(x[i]);
            break;
        }
        case OpKind::Exp: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = std::exp(x[i]);
            break;
        }
        case OpKind::Square: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] * x[i];
            break;
        }
        case OpKind::Sqrt: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = std::sqrt(x[i]);
            break;
        }
        case OpKind::Mean: {
            if (x.size() == 0) CHFUQ_THROW(Error, "mean: empty operand");
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
            n.value = Array::scalar(s / static_cast<double>(x.size()));
            break;
        }
        case OpKind::Sum: {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
            n.value = Array::scalar(s);
            break;
        }
        case OpKind::ColMean: {
            if (x.rows() == 0) CHFUQ_THROW(Error, "col_mean: empty operand");
            n.value = Array(1, x.cols());
            for (std::size_t j = 0; j < x.cols(); ++j) {
                double s = 0.0;
                for (std::size_t r = 0; r < x.rows(); ++r) s += x.at(r, j);
                n.value[j] = s / static_cast<double>(x.rows());
            }
            break;
        }
        case OpKind::Relu: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
        }
        case OpKind::Sigmoid: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = sigmoid_scalar(x[i]);
            break;
        }
        case OpKind::Softplus: {
            if (c <= 0.0) CHFUQ_THROW(Error, "softplus: beta must be > 0, got %g", c);
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = softplus_scalar(x[i], c);
            break;
        }
        case OpKind::ClampMin: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] > c ? x[i] : c;
            break;
        }
        case OpKind::Scale: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] * c;
            break;
        }
        case OpKind::AddScalar: {
            n.value = Array(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] + c;
            break;
        }
        default:
            CHFUQ_THROW(Error, "tape: %s is not unary", op_name(kind));
    }
    return push(std::move(n));
}

Var Tape::binary(OpKind kind, Var a, Var b) {
    const std::int32_t ia = check(a), ib = check(b);
    const Array& x = nodes_[ia].value;
    const Array& y = nodes_[ib].value;

    Node n;
    n.op = kind;
    n.args = {ia, ib};
    n.needs_grad = nodes_[ia].needs_grad || nodes_[ib].needs_grad;

    if (kind == OpKind::MatMul) {
        if (x.cols() != y.rows())
            CHFUQ_THROW(Error, "matmul: incompatible shapes %s and %s", shape_str(x).c_str(),
                        shape_str(y).c_str());
        Array out(x.rows(), y.cols());
        // ikj ordering, contiguous inner loop on the output row.
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double* orow = out.data() + i * y.cols();
            for (std::size_t k = 0; k < x.cols(); ++k) {
                const double xv = x.at(i, k);
                const double* yrow = y.data() + k * y.cols();
                for (std::size_t j = 0; j < y.cols(); ++j) orow[j] += xv * yrow[j];
            }
        }
        n.value = std::move(out);
        return push(std::move(n));
    }

    const bool conformable =
        x.same_shape(y) || (y.rows() == 1 && y.cols() == 1) ||
        (y.rows() == 1 && y.cols() == x.cols());
    if (!conformable)
        CHFUQ_THROW(Error, "%s: incompatible shapes %s and %s", op_name(kind),
                    shape_str(x).c_str(), shape_str(y).c_str());

    const Broadcast bc = broadcast_form(x, y);
    Array out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t col = 0; col < x.cols(); ++col) {
            const double xv = x.at(r, col);
            const double yv = bc == Broadcast::None ? y.at(r, col)
                              : bc == Broadcast::Row ? y.at(0, col)
                                                     : y[0];
            double o = 0.0;
            switch (kind) {
                case OpKind::Add: o = xv + yv; break;
                case OpKind::Sub: o = xv - yv; break;
                case OpKind::Mul: o = xv * yv; break;
                case OpKind::Div: o = xv / yv; break;
                default: CHFUQ_THROW(Error, "tape: %s is not binary", op_name(kind));
            }
            out.at(r, col) = o;
        }
    }
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) { return binary(OpKind::MatMul, a, b); }
Var Tape::add(Var a, Var b) { return binary(OpKind::Add, a, b); }
Var Tape::sub(Var a, Var b) { return binary(OpKind::Sub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(OpKind::Mul, a, b); }
Var Tape::div(Var a, Var b) { return binary(OpKind::Div, a, b); }
Var Tape::log(Var a) { return unary(OpKind::Log, a); }
Var Tape::exp(Var a) { return unary(OpKind::Exp, a); }
Var Tape::square(Var a) { return unary(OpKind::Square, a); }
Var Tape::sqrt(Var a) { return unary(OpKind::Sqrt, a); }
Var Tape::mean(Var a) { return unary(OpKind::Mean, a); }
Var Tape::sum(Var a) { return unary(OpKind::Sum, a); }
Var Tape::col_mean(Var a) { return unary(OpKind::ColMean, a); }
Var Tape::relu(Var a) { return unary(OpKind::Relu, a); }
Var Tape::sigmoid(Var a) { return unary(OpKind::Sigmoid, a); }
Var Tape::softplus(Var a, double beta) { return unary(OpKind::Softplus, a, beta); }
Var Tape::clamp_min(Var a, double floor) { return unary(OpKind::ClampMin, a, floor); }
Var Tape::scale(Var a, double c) { return unary(OpKind::Scale, a, c); }
Var Tape::add_scalar(Var a, double c) { return unary(OpKind::AddScalar, a, c); }

Var Tape::slice_cols(Var a, std::size_t first, std::size_t count) {
    const std::int32_t ia = check(a);
    const Array& x = nodes_[ia].value;
    if (count == 0 || first + count > x.cols())
        CHFUQ_THROW(Error, "slice_cols: [%zu, %zu) out of %s", first, first + count,
                    shape_str(x).c_str());
    Node n;
    n.op = OpKind::SliceCols;
    n.args = {ia, -1};
    n.i0 = first;
    n.i1 = count;
    n.needs_grad = nodes_[ia].needs_grad;
    Array out(x.rows(), count);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < count; ++j) out.at(r, j) = x.at(r, first + j);
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::forward_primitive(OpKind kind, const std::vector<Var>& operands, double c) {
    switch (kind) {
        case OpKind::MatMul:
        case OpKind::Add:
        case OpKind::Sub:
        case OpKind::Mul:
        case OpKind::Div:
            if (operands.size() != 2)
                CHFUQ_THROW(Error, "%s: expected 2 operands, got %zu", op_name(kind),
                            operands.size());
            return binary(kind, operands[0], operands[1]);
        case OpKind::Leaf:
        case OpKind::SliceCols:
            CHFUQ_THROW(Error, "%s: not dispatchable via forward_primitive", op_name(kind));
        default:
            if (operands.size() != 1)
                CHFUQ_THROW(Error, "%s: expected 1 operand, got %zu", op_name(kind),
                            operands.size());
            return unary(kind, operands[0], c);
    }
}

void Tape::accumulate(std::int32_t target, const Array& delta) {
    Node& t = nodes_[target];
    if (!t.needs_grad) return;
    if (t.grad.size() == 0) t.grad = Array(t.value.rows(), t.value.cols());
    const Array& x = t.value;
    const Broadcast bc = x.same_shape(delta)
                             ? Broadcast::None
                             : (x.is_scalar() ? Broadcast::Scalar : Broadcast::Row);
    if (bc == Broadcast::None) {
        for (std::size_t i = 0; i < delta.size(); ++i) t.grad[i] += delta[i];
    } else if (bc == Broadcast::Scalar) {
        double s = 0.0;
        for (std::size_t i = 0; i < delta.size(); ++i) s += delta[i];
        t.grad[0] += s;
    } else {
        // Row vector broadcast over rows: reduce by column sum.
        for (std::size_t r = 0; r < delta.rows(); ++r)
            for (std::size_t j = 0; j < delta.cols(); ++j) t.grad[j] += delta.at(r, j);
    }
}

void Tape::backprop_node(std::int32_t i) {
    Node& n = nodes_[i];
    if (n.op == OpKind::Leaf || !n.needs_grad || n.grad.size() == 0) return;
    const Array& g = n.grad;
    const std::int32_t ia = n.args[0];
    const std::int32_t ib = n.args[1];
    const Array& x = nodes_[ia].value;

    switch (n.op) {
        case OpKind::MatMul: {
            const Array& y = nodes_[ib].value;
            if (nodes_[ia].needs_grad) {
                Array da(x.rows(), x.cols());
                for (std::size_t r = 0; r < x.rows(); ++r)
                    for (std::size_t k = 0; k < x.cols(); ++k) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < y.cols(); ++j) s += g.at(r, j) * y.at(k, j);
                        da.at(r, k) = s;
                    }
                accumulate(ia, da);
            }
            if (nodes_[ib].needs_grad) {
                Array db(y.rows(), y.cols());
                for (std::size_t k = 0; k < y.rows(); ++k)
                    for (std::size_t j = 0; j < y.cols(); ++j) {
                        double s = 0.0;
                        for (std::size_t r = 0; r < x.rows(); ++r) s += x.at(r, k) * g.at(r, j);
                        db.at(k, j) = s;
                    }
                accumulate(ib, db);
            }
            break;
        }
        case OpKind::Add: {
            accumulate(ia, g);
            accumulate(ib, g);
            break;
        }
        case OpKind::Sub: {
            accumulate(ia, g);
            if (nodes_[ib].needs_grad) {
                Array neg(g.rows(), g.cols());
                for (std::size_t k = 0; k < g.size(); ++k) neg[k] = -g[k];
                accumulate(ib, neg);
            }
            break;
        }
        case OpKind::Mul: {
            const Array& y = nodes_[ib].value;
            const Broadcast bc = broadcast_form(x, y);
            if (nodes_[ia].needs_grad) {
                Array da(x.rows(), x.cols());
                for (std::size_t r = 0; r < x.rows(); ++r)
                    for (std::size_t j = 0; j < x.cols(); ++j) {
                        const double yv = bc == Broadcast::None ? y.at(r, j)
                                          : bc == Broadcast::Row ? y.at(0, j)
                                                                 : y[0];
                        da.at(r, j) = g.at(r, j) * yv;
                    }
                accumulate(ia, da);
            }
            if (nodes_[ib].needs_grad) {
                Array db(x.rows(), x.cols());
                for (std::size_t k = 0; k < x.size(); ++k) db[k] = g[k] * x[k];
                accumulate(ib, db);  // accumulate() reduces over the broadcast
            }
            break;
        }
        case OpKind::Div: {
            const Array& y = nodes_[ib].value;
            const Broadcast bc = broadcast_form(x, y);
            Array da(x.rows(), x.cols());
            Array db(x.rows(), x.cols());
            for (std::size_t r = 0; r < x.rows(); ++r)
                for (std::size_t j = 0; j < x.cols(); ++j) {
                    const double yv = bc == Broadcast::None ? y.at(r, j)
                                      : bc == Broadcast::Row ? y.at(0, j)
                                                             : y[0];
                    const double gv = g.at(r, j);
                    da.at(r, j) = gv / yv;
                    db.at(r, j) = -gv * x.at(r, j) / (yv * yv);
                }
            if (nodes_[ia].needs_grad) accumulate(ia, da);
            if (nodes_[ib].needs_grad) accumulate(ib, db);
            break;
        }
        case OpKind::Log: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = g[k] / x[k];
            accumulate(ia, da);
            break;
        }
        case OpKind::Exp: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = g[k] * n.value[k];
            accumulate(ia, da);
            break;
        }
        case OpKind::Square: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = g[k] * 2.0 * x[k];
            accumulate(ia, da);
            break;
        }
        case OpKind::Sqrt: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = g[k] * 0.5 / n.value[k];
            accumulate(ia, da);
            break;
        }
        case OpKind::Mean: {
            const double gv = g[0] / static_cast<double>(x.size());
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = gv;
            accumulate(ia, da);
            break;
        }
        case OpKind::Sum: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = g[0];
            accumulate(ia, da);
            break;
        }
        case OpKind::ColMean: {
            const double inv = 1.0 / static_cast<double>(x.rows());
            Array da(x.rows(), x.cols());
            for (std::size_t r = 0; r < x.rows(); ++r)
                for (std::size_t j = 0; j < x.cols(); ++j) da.at(r, j) = g[j] * inv;
            accumulate(ia, da);
            break;
        }
        case OpKind::Relu: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = x[k] > 0.0 ? g[k] : 0.0;
            accumulate(ia, da);
            break;
        }
        case OpKind::Sigmoid: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k)
                da[k] = g[k] * n.value[k] * (1.0 - n.value[k]);
            accumulate(ia, da);
            break;
        }
        case OpKind::Softplus: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k)
                da[k] = g[k] * sigmoid_scalar(n.c * x[k]);
            accumulate(ia, da);
            break;
        }
        case OpKind::ClampMin: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = x[k] > n.c ? g[k] : 0.0;
            accumulate(ia, da);
            break;
        }
        case OpKind::Scale: {
            Array da(x.rows(), x.cols());
            for (std::size_t k = 0; k < x.size(); ++k) da[k] = g[k] * n.c;
            accumulate(ia, da);
            break;
        }
        case OpKind::AddScalar: {
            accumulate(ia, g);
            break;
        }
        case OpKind::SliceCols: {
            Array da(x.rows(), x.cols());
            for (std::size_t r = 0; r < x.rows(); ++r)
                for (std::size_t j = 0; j < n.i1; ++j) da.at(r, n.i0 + j) = g.at(r, j);
            accumulate(ia, da);
            break;
        }
        case OpKind::Leaf:
            break;
    }
}

void Tape::backward(Var output) {
    const std::int32_t iout = check(output);
    if (backward_done_) CHFUQ_THROW(Error, "tape: backward already ran on this tape");
    const Array& out = nodes_[iout].value;
    if (!out.is_scalar())
        CHFUQ_THROW(Error, "backward: output must be 1x1, got %s", shape_str(out).c_str());
    backward_done_ = true;
    if (!nodes_[iout].needs_grad) return;  // nothing trainable feeds the output
    nodes_[iout].grad = Array::scalar(1.0);
    for (std::int32_t i = iout; i >= 0; --i) backprop_node(i);
}

}  // namespace chfuq::engine
