#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

using NodeId = std::size_t;

enum class OpKind : std::uint8_t {
    Leaf,
    Linear,
    Tanh,
    Relu,
    Add,
    Mul,
    Scale,
    Shift,
    Sum,
    Mean,
    SquaredError,
    Exp,
    Log,
    Detach,
    GatherRows,
    StraightThrough,
};

std::string_view op_name(OpKind op);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
    Graph* graph = nullptr;
    NodeId id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

/// Gradients keyed by node id, as returned by Graph::backprop.
using GradientMap = std::unordered_map<NodeId, std::vector<double>>;

/// Computation record for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the node list is a topological
/// order. Each node keeps its forward value; backward rules read saved values
/// from the node and its inputs.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Leaf bound to an external tensor. Gradients flow back into it when
    /// the tensor requires grad and accumulate_into_sources() is called.
    Var parameter(Tensor& source);
    /// Leaf holding a copy of `value`.
    Var input(Tensor value, bool requires_grad = false);
    Var constant(Tensor value) { return input(std::move(value), false); }

    std::size_t size() const noexcept { return nodes_.size(); }
    const Tensor& value(NodeId id) const;
    OpKind op(NodeId id) const;
    const std::vector<NodeId>& inputs(NodeId id) const;
    bool requires_grad(NodeId id) const;

    /// d(loss)/d(leaf) for every leaf that requires grad. Fan-out is summed.
    GradientMap backprop(Var loss) const;

    /// Adds the given leaf gradients into the bound source tensors' grad buffers.
    void accumulate_into_sources(const GradientMap& grads) const;

    /// Convenience: backprop then accumulate into sources.
    GradientMap backward(Var loss);

    /// Recomputes every non-leaf node from its inputs and reports whether all
    /// values match the recorded ones bit-for-bit.
    bool replay_matches() const;

    // Used by the free-function ops below.
    Var record(OpKind op, std::vector<NodeId> inputs, Tensor value,
               std::vector<std::size_t> indices = {}, double scalar = 0.0);
    const std::vector<std::size_t>& saved_indices(NodeId id) const;
    double saved_scalar(NodeId id) const;

private:
    struct Node {
        OpKind op = OpKind::Leaf;
        std::vector<NodeId> inputs;
        Tensor value;
        Tensor* source = nullptr;
        bool requires_grad = false;
        std::vector<std::size_t> indices;
        double scalar = 0.0;
    };

    void check_id(NodeId id) const;
    Tensor recompute(const Node& node) const;

    std::vector<Node> nodes_;
};

// Primitive ops. Every op checks shapes and rejects non-finite results.

/// x [batch x in], w [out x in], b [out] -> x w^T + b.
Var linear(Var w, Var b, Var x);
Var tanh(Var x);
Var relu(Var x);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var shift(Var x, double offset);
Var sub(Var a, Var b);
Var sum(Var x);
Var mean(Var x);
/// Elementwise (a - b)^2.
Var squared_error(Var a, Var b);
Var exp(Var x);
Var log(Var x);
/// Same value, no gradient flows through.
Var detach(Var x);
/// Rows of `table` selected by `indices`; gradients scatter-add back.
Var gather_rows(Var table, std::vector<std::size_t> indices);
/// Forward value is `forward_value`; backward passes the gradient to `x` unchanged.
Var straight_through(Var x, Tensor forward_value);

/// Raw forward of the linear op, used by oracles and evaluation paths.
Tensor forward_linear(const Tensor& w, const Tensor& b, const Tensor& x);

}  // namespace dae
