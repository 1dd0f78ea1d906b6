#pragma once

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every primitive op as a node holding its value and a
// backward closure. Nodes are appended in evaluation order, which is a
// topological order, so backward() walks the tape once in reverse.
//
// Gradients on Parameters are never accumulated silently: after a
// backward() a parameter holds a gradient until zero_grad() is called, and a
// second backward() without a reset throws GradientStateError unless the
// caller asks for accumulation explicitly.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "galmad/tensor.hpp"

namespace galmad::ad {

class Parameter {
public:
    Parameter() = default;
    Parameter(std::string name, Tensor value) : name_(std::move(name)), value_(std::move(value)) {}

    const std::string& name() const { return name_; }
    const Tensor& value() const { return value_; }
    Tensor& value() { return value_; }
    const Shape& shape() const { return value_.shape(); }

    bool has_grad() const { return has_grad_; }
    // Throws GradientStateError when no gradient is present.
    const Tensor& grad() const;
    void zero_grad();

private:
    friend class Tape;
    std::string name_;
    Tensor value_;
    Tensor grad_;
    bool has_grad_ = false;
};

enum class GradMode { Enabled, Disabled };

class Tape;

class Var {
public:
    Var() = default;
    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class BackwardContext;

class Tape {
public:
    using BackwardFn = std::function<void(BackwardContext&)>;

    explicit Tape(GradMode mode = GradMode::Enabled) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    GradMode mode() const { return mode_; }
    std::size_t size() const { return nodes_.size(); }

    Var constant(Tensor value);
    // Leaf that receives a gradient readable through grad(); used for inputs.
    Var variable(Tensor value);
    // Registers a parameter once per tape; repeated calls return the same leaf.
    Var param(Parameter& p);

    /// Propagates d(loss)/d(node) backward through every recorded op.
    ///
    /// All parameters registered on this tape receive a gradient (zeros when
    /// unreachable). Returns the number of op nodes whose backward closure
    /// ran. Throws RankError when loss is not a scalar and
    /// GradientStateError when a parameter still holds an un-reset gradient
    /// and accumulate is false.
    std::size_t backward(Var loss, bool accumulate = false);

    // Gradient of a variable() leaf after backward().
    const Tensor& grad(Var v) const;

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    // Appends an op node. The closure is dropped when no input needs a gradient.
    Var record(Tensor value, std::vector<Var> inputs, BackwardFn fn);

private:
    friend class BackwardContext;
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        Parameter* param = nullptr;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
    };

    Tensor& grad_slot(std::size_t id);

    GradMode mode_;
    std::deque<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_ids_;
    bool consumed_ = false;
};

class BackwardContext {
public:
    const Tensor& grad_out() const { return tape_.nodes_[self_].grad; }
    const Tensor& output() const { return tape_.nodes_[self_].value; }
    const Tensor& input(std::size_t i) const { return tape_.nodes_[tape_.nodes_[self_].inputs[i]].value; }
    bool needs(std::size_t i) const { return tape_.nodes_[tape_.nodes_[self_].inputs[i]].requires_grad; }
    // Zero-initialized on first touch; only valid when needs(i).
    Tensor& grad_in(std::size_t i) { return tape_.grad_slot(tape_.nodes_[self_].inputs[i]); }

private:
    friend class Tape;
    BackwardContext(Tape& tape, std::size_t self) : tape_(tape), self_(self) {}
    Tape& tape_;
    std::size_t self_;
};

// ---- primitive ops --------------------------------------------------------

Var matmul(Var a, Var b);
// Equal shapes, a scalar b, or a row vector b ([q] or [1 x q]) broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Equal shapes or scalar b.
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var sigmoid(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double negative_slope = 0.2);
Var elu(Var a, double alpha = 1.0);

/// Softmax over the last axis restricted to entries where mask is nonzero.
///
/// mask has either cols() entries (shared by every row) or r*cols() entries,
/// in which case logits are viewed as blocks of r rows and row i uses mask
/// row i mod r. Masked-out outputs are exactly zero. Throws
/// DegenerateMaskError for a row with no admitted entry.
Var masked_softmax(Var logits, const std::vector<std::uint8_t>& mask);

Var mse(Var pred, Var target);
Var sum(Var a);
Var mean(Var a);

Var reshape(Var a, Shape shape);
// Rows/cols of the matrix view (last axis = columns).
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(const std::vector<Var>& parts);

// left, right: [g*n] or [g*n x 1]. out[b, i, j] = left[b*n + i] + right[b*n + j], shape [g x n x n].
Var pair_sum(Var left, Var right, std::size_t n);
// att: [g x n x n], values: [g*n x d]. out[b*n + i] = sum_j att[b, i, j] * values[b*n + j].
Var batched_matmul(Var att, Var values);

}  // namespace galmad::ad
