#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "chfuq/engine/array.hpp"

namespace chfuq::engine {

/// Primitive kinds the tape can record. Binary elementwise ops support two
/// broadcast forms for the second operand: a 1xC row vector against an NxC
/// matrix, and a 1x1 scalar against anything.
enum class OpKind : std::uint8_t {
    Leaf,
    MatMul,
    Add,
    Sub,
    Mul,
    Div,
    Log,
    Exp,
    Square,
    Sqrt,
    Mean,
    Sum,
    ColMean,
    Relu,
    Sigmoid,
    Softplus,
    ClampMin,
    Scale,      // x * c
    AddScalar,  // x + c
    SliceCols,
};

const char* op_name(OpKind k);

/// Handle to a node on a tape. Only meaningful together with the tape that
/// produced it.
struct Var {
    std::int32_t idx = -1;
    bool valid() const { return idx >= 0; }
};

/// Define-by-run reverse-mode tape over dense rank-<=2 arrays. Nodes are
/// appended in topological order by construction; backward() walks them once
/// in reverse. A tape is single-threaded; build a fresh one per forward pass.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Record an input. Trainable leaves receive gradients in backward().
    Var leaf(Array value, bool trainable = false);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var log(Var a);
    Var exp(Var a);
    Var square(Var a);
    Var sqrt(Var a);
    Var mean(Var a);
    Var sum(Var a);
    Var col_mean(Var a);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a, double beta);
    Var clamp_min(Var a, double floor);
    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    Var slice_cols(Var a, std::size_t first, std::size_t count);

    /// Generic entry point; dispatches on kind. Unary kinds take one operand,
    /// binary kinds two. `c` carries the constant for parameterized kinds
    /// (softplus beta, clamp floor, scale factor, added scalar).
    Var forward_primitive(OpKind kind, const std::vector<Var>& operands, double c = 0.0);

    /// Reverse sweep from a scalar output. Gradients of trainable leaves (and
    /// of every intermediate that feeds them) are accumulated on the nodes
    /// and readable via grad(). May be called once per tape.
    void backward(Var output);

    const Array& val(Var v) const { return nodes_[check(v)].value; }
    /// Gradient accumulated for a node; zero-shaped until backward() ran.
    const Array& grad(Var v) const { return nodes_[check(v)].grad; }
    bool has_grad(Var v) const { return nodes_[check(v)].grad.size() > 0; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        OpKind op = OpKind::Leaf;
        std::array<std::int32_t, 2> args{-1, -1};
        double c = 0.0;           // op constant (beta / floor / factor / addend)
        std::size_t i0 = 0;       // slice first column
        std::size_t i1 = 0;       // slice column count
        Array value;
        Array grad;               // allocated lazily during backward
        bool trainable = false;
        bool needs_grad = false;  // true iff some trainable leaf feeds this node
    };

    std::int32_t check(Var v) const;
    Var push(Node n);
    Var unary(OpKind kind, Var a, double c = 0.0);
    Var binary(OpKind kind, Var a, Var b);
    void accumulate(std::int32_t target, const Array& delta);
    void backprop_node(std::int32_t i);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace chfuq::engine
