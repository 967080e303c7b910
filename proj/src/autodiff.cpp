#include "dae/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "dae/errors.hpp"

namespace dae {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_finite(const Tensor& t, std::string_view op) {
    if (!t.all_finite()) {
        throw NumericError("non-finite value produced by " + std::string(op));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

Tensor unary(const Tensor& x, auto fn) {
    std::vector<double> out(x.size());
    std::transform(x.values().begin(), x.values().end(), out.begin(), fn);
    return Tensor(x.shape(), std::move(out));
}

Tensor binary(const Tensor& a, const Tensor& b, auto fn) {
    std::vector<double> out(a.size());
    std::transform(a.values().begin(), a.values().end(), b.values().begin(), out.begin(), fn);
    return Tensor(a.shape(), std::move(out));
}

// Eigen chooses its vectorized code path from the operands' addresses, so
// products over arbitrary heap buffers are not bit-reproducible. Copying into
// Eigen-owned storage fixes the alignment.
RowMatrix aligned(const double* data, std::size_t rows, std::size_t cols) {
    return ConstMatrixMap(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

RowMatrix aligned(const Tensor& t) { return aligned(t.data().data(), t.rows(), t.cols()); }

void add_into(std::vector<double>& dst, const RowMatrix& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src.data()[i];
}

Tensor linear_value(const Tensor& w, const Tensor& b, const Tensor& x) {
    if (w.rank() != 2 || x.rank() != 2 || b.size() != w.rows() || x.cols() != w.cols()) {
        throw DimensionError("linear: weight " + shape_string(w.shape()) + ", bias " + shape_string(b.shape()) +
                             ", input " + shape_string(x.shape()) + " do not compose");
    }
    const auto batch = x.rows();
    const auto out_dim = w.rows();
    const RowMatrix product = aligned(x) * aligned(w).transpose();
    std::vector<double> out(product.data(), product.data() + product.size());
    for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < out_dim; ++j) out[i * out_dim + j] += b[j];
    return Tensor::matrix(batch, out_dim, std::move(out));
}

Tensor gather_value(const Tensor& table, const std::vector<std::size_t>& indices) {
    if (table.rank() != 2) throw DimensionError("gather_rows: table must be a matrix, got " + shape_string(table.shape()));
    if (indices.empty()) throw DimensionError("gather_rows: empty index list");
    const auto width = table.cols();
    std::vector<double> out(indices.size() * width);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= table.rows()) throw DimensionError("gather_rows: index out of range");
        std::copy_n(table.values().begin() + static_cast<std::ptrdiff_t>(indices[i] * width), width,
                    out.begin() + static_cast<std::ptrdiff_t>(i * width));
    }
    return Tensor::matrix(indices.size(), width, std::move(out));
}

Tensor compute(OpKind op, const std::vector<const Tensor*>& in, const std::vector<std::size_t>& indices,
               double scalar) {
    switch (op) {
        case OpKind::Linear:
            return linear_value(*in[0], *in[1], *in[2]);
        case OpKind::Tanh:
            return unary(*in[0], [](double v) { return std::tanh(v); });
        case OpKind::Relu:
            return unary(*in[0], [](double v) { return v > 0.0 ? v : 0.0; });
        case OpKind::Add:
            return binary(*in[0], *in[1], [](double a, double b) { return a + b; });
        case OpKind::Mul:
            return binary(*in[0], *in[1], [](double a, double b) { return a * b; });
        case OpKind::Scale:
            return unary(*in[0], [scalar](double v) { return scalar * v; });
        case OpKind::Shift:
            return unary(*in[0], [scalar](double v) { return v + scalar; });
        case OpKind::Sum: {
            double s = 0.0;
            for (double v : in[0]->values()) s += v;
            return Tensor::scalar(s);
        }
        case OpKind::Mean: {
            double s = 0.0;
            for (double v : in[0]->values()) s += v;
            return Tensor::scalar(s / static_cast<double>(in[0]->size()));
        }
        case OpKind::SquaredError:
            return binary(*in[0], *in[1], [](double a, double b) { return (a - b) * (a - b); });
        case OpKind::Exp:
            return unary(*in[0], [](double v) { return std::exp(v); });
        case OpKind::Log:
            return unary(*in[0], [](double v) { return std::log(v); });
        case OpKind::Detach:
            return Tensor(in[0]->shape(), in[0]->values());
        case OpKind::GatherRows:
            return gather_value(*in[0], indices);
        case OpKind::Leaf:
        case OpKind::StraightThrough:
            break;
    }
    throw GraphError("op has no recomputable forward");
}

void axpy(std::vector<double>& dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

std::string_view op_name(OpKind op) {
    switch (op) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Linear: return "linear";
        case OpKind::Tanh: return "tanh";
        case OpKind::Relu: return "relu";
        case OpKind::Add: return "add";
        case OpKind::Mul: return "mul";
        case OpKind::Scale: return "scale";
        case OpKind::Shift: return "shift";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
        case OpKind::SquaredError: return "squared_error";
        case OpKind::Exp: return "exp";
        case OpKind::Log: return "log";
        case OpKind::Detach: return "detach";
        case OpKind::GatherRows: return "gather_rows";
        case OpKind::StraightThrough: return "straight_through";
    }
    return "unknown";
}

const Tensor& Var::value() const {
    if (graph == nullptr) throw GraphError("unbound variable");
    return graph->value(id);
}

void Graph::check_id(NodeId id) const {
    if (id >= nodes_.size()) throw GraphError("node " + std::to_string(id) + " is not in the record");
}

Var Graph::parameter(Tensor& source) {
    require_finite(source, "parameter");
    Node node;
    node.value = Tensor(source.shape(), source.values());
    node.source = &source;
    node.requires_grad = source.requires_grad();
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Var Graph::input(Tensor value, bool requires_grad) {
    require_finite(value, "input");
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Var Graph::record(OpKind op, std::vector<NodeId> inputs, Tensor value, std::vector<std::size_t> indices,
                  double scalar) {
    require_finite(value, op_name(op));
    Node node;
    node.op = op;
    node.requires_grad = false;
    if (op != OpKind::Detach) {
        for (auto id : inputs) {
            check_id(id);
            node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
        }
    }
    node.inputs = std::move(inputs);
    node.value = std::move(value);
    node.indices = std::move(indices);
    node.scalar = scalar;
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

const Tensor& Graph::value(NodeId id) const {
    check_id(id);
    return nodes_[id].value;
}

OpKind Graph::op(NodeId id) const {
    check_id(id);
    return nodes_[id].op;
}

const std::vector<NodeId>& Graph::inputs(NodeId id) const {
    check_id(id);
    return nodes_[id].inputs;
}

bool Graph::requires_grad(NodeId id) const {
    check_id(id);
    return nodes_[id].requires_grad;
}

const std::vector<std::size_t>& Graph::saved_indices(NodeId id) const {
    check_id(id);
    return nodes_[id].indices;
}

double Graph::saved_scalar(NodeId id) const {
    check_id(id);
    return nodes_[id].scalar;
}

GradientMap Graph::backprop(Var loss) const {
    if (loss.graph != this) throw GraphError("loss belongs to a different record");
    check_id(loss.id);
    if (nodes_[loss.id].value.size() != 1) {
        throw ContractError("backprop requires a scalar loss, got shape " + shape_string(nodes_[loss.id].value.shape()));
    }

    std::vector<std::vector<double>> grads(loss.id + 1);
    grads[loss.id] = {1.0};

    auto grad_of = [&](NodeId id) -> std::vector<double>* {
        if (!nodes_[id].requires_grad) return nullptr;
        auto& g = grads[id];
        if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
        return &g;
    };

    for (NodeId id = loss.id + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (node.op == OpKind::Leaf || !node.requires_grad || grads[id].empty()) continue;
        const std::vector<double>& gout = grads[id];
        const auto& in = node.inputs;

        switch (node.op) {
            case OpKind::Linear: {
                const Tensor& w = nodes_[in[0]].value;
                const Tensor& x = nodes_[in[2]].value;
                const auto batch = x.rows();
                const auto out_dim = w.rows();
                const RowMatrix go = aligned(gout.data(), batch, out_dim);
                if (auto* gw = grad_of(in[0])) {
                    const RowMatrix gw_new = go.transpose() * aligned(x);
                    add_into(*gw, gw_new);
                }
                if (auto* gb = grad_of(in[1])) {
                    for (std::size_t i = 0; i < batch; ++i)
                        for (std::size_t j = 0; j < out_dim; ++j) (*gb)[j] += gout[i * out_dim + j];
                }
                if (auto* gx = grad_of(in[2])) {
                    const RowMatrix gx_new = go * aligned(w);
                    add_into(*gx, gx_new);
                }
                break;
            }
            case OpKind::Tanh:
                if (auto* gx = grad_of(in[0])) {
                    const auto& y = node.value.values();
                    for (std::size_t i = 0; i < gout.size(); ++i) (*gx)[i] += gout[i] * (1.0 - y[i] * y[i]);
                }
                break;
            case OpKind::Relu:
                if (auto* gx = grad_of(in[0])) {
                    const auto& x = nodes_[in[0]].value.values();
                    for (std::size_t i = 0; i < gout.size(); ++i) {
                        if (x[i] > 0.0) (*gx)[i] += gout[i];
                    }
                }
                break;
            case OpKind::Add:
                if (auto* ga = grad_of(in[0])) axpy(*ga, gout);
                if (auto* gb = grad_of(in[1])) axpy(*gb, gout);
                break;
            case OpKind::Mul: {
                const auto& a = nodes_[in[0]].value.values();
                const auto& b = nodes_[in[1]].value.values();
                if (auto* ga = grad_of(in[0])) {
                    for (std::size_t i = 0; i < gout.size(); ++i) (*ga)[i] += gout[i] * b[i];
                }
                if (auto* gb = grad_of(in[1])) {
                    for (std::size_t i = 0; i < gout.size(); ++i) (*gb)[i] += gout[i] * a[i];
                }
                break;
            }
            case OpKind::Scale:
                if (auto* gx = grad_of(in[0])) {
                    for (std::size_t i = 0; i < gout.size(); ++i) (*gx)[i] += node.scalar * gout[i];
                }
                break;
            case OpKind::Shift:
            case OpKind::StraightThrough:
                if (auto* gx = grad_of(in[0])) axpy(*gx, gout);
                break;
            case OpKind::Sum:
                if (auto* gx = grad_of(in[0])) {
                    for (auto& v : *gx) v += gout[0];
                }
                break;
            case OpKind::Mean:
                if (auto* gx = grad_of(in[0])) {
                    const double g = gout[0] / static_cast<double>(gx->size());
                    for (auto& v : *gx) v += g;
                }
                break;
            case OpKind::SquaredError: {
                const auto& a = nodes_[in[0]].value.values();
                const auto& b = nodes_[in[1]].value.values();
                if (auto* ga = grad_of(in[0])) {
                    for (std::size_t i = 0; i < gout.size(); ++i) (*ga)[i] += 2.0 * gout[i] * (a[i] - b[i]);
                }
                if (auto* gb = grad_of(in[1])) {
                    for (std::size_t i = 0; i < gout.size(); ++i) (*gb)[i] -= 2.0 * gout[i] * (a[i] - b[i]);
                }
                break;
            }
            case OpKind::Exp:
                if (auto* gx = grad_of(in[0])) {
                    const auto& y = node.value.values();
                    for (std::size_t i = 0; i < gout.size(); ++i) (*gx)[i] += gout[i] * y[i];
                }
                break;
            case OpKind::Log:
                if (auto* gx = grad_of(in[0])) {
                    const auto& x = nodes_[in[0]].value.values();
                    for (std::size_t i = 0; i < gout.size(); ++i) (*gx)[i] += gout[i] / x[i];
                }
                break;
            case OpKind::GatherRows:
                if (auto* gt = grad_of(in[0])) {
                    const auto width = node.value.cols();
                    for (std::size_t r = 0; r < node.indices.size(); ++r) {
                        const auto dst = node.indices[r] * width;
                        for (std::size_t j = 0; j < width; ++j) (*gt)[dst + j] += gout[r * width + j];
                    }
                }
                break;
            case OpKind::Detach:
            case OpKind::Leaf:
                break;
        }
    }

    GradientMap result;
    for (NodeId id = 0; id <= loss.id; ++id) {
        if (nodes_[id].op != OpKind::Leaf || !nodes_[id].requires_grad) continue;
        if (grads[id].empty()) {
            result.emplace(id, std::vector<double>(nodes_[id].value.size(), 0.0));
        } else {
            result.emplace(id, std::move(grads[id]));
        }
    }
    return result;
}

void Graph::accumulate_into_sources(const GradientMap& grads) const {
    for (const auto& [id, g] : grads) {
        check_id(id);
        Tensor* source = nodes_[id].source;
        if (source == nullptr || !source->requires_grad()) continue;
        auto& buf = source->grad_buffer();
        if (buf.size() != g.size()) throw GraphError("gradient length does not match its source tensor");
        axpy(buf, g);
    }
}

GradientMap Graph::backward(Var loss) {
    auto grads = backprop(loss);
    accumulate_into_sources(grads);
    return grads;
}

Tensor Graph::recompute(const Node& node) const {
    std::vector<const Tensor*> in;
    in.reserve(node.inputs.size());
    for (auto id : node.inputs) in.push_back(&nodes_[id].value);
    return compute(node.op, in, node.indices, node.scalar);
}

bool Graph::replay_matches() const {
    for (const auto& node : nodes_) {
        if (node.op == OpKind::Leaf || node.op == OpKind::StraightThrough) continue;
        for (auto id : node.inputs) {
            if (&nodes_[id] >= &node) return false;
        }
        Tensor again = recompute(node);
        if (again.shape() != node.value.shape()) return false;
        if (!std::equal(again.values().begin(), again.values().end(), node.value.values().begin())) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {

Graph& graph_of(Var v) {
    if (v.graph == nullptr) throw GraphError("unbound variable");
    return *v.graph;
}

Graph& same_graph(Var a, Var b) {
    if (a.graph != b.graph) throw GraphError("operands belong to different records");
    return graph_of(a);
}

Var simple(OpKind op, std::vector<Var> vars, double scalar = 0.0) {
    Graph& g = graph_of(vars.front());
    std::vector<NodeId> ids;
    std::vector<const Tensor*> in;
    for (auto v : vars) {
        if (v.graph != &g) throw GraphError("operands belong to different records");
        ids.push_back(v.id);
        in.push_back(&g.value(v.id));
    }
    return g.record(op, std::move(ids), compute(op, in, {}, scalar), {}, scalar);
}

}  // namespace

Tensor forward_linear(const Tensor& w, const Tensor& b, const Tensor& x) {
    require_finite(w, "linear weight");
    require_finite(b, "linear bias");
    require_finite(x, "linear input");
    auto out = linear_value(w, b, x);
    require_finite(out, "linear");
    return out;
}

Var linear(Var w, Var b, Var x) {
    same_graph(w, b);
    same_graph(w, x);
    return simple(OpKind::Linear, {w, b, x});
}

Var tanh(Var x) { return simple(OpKind::Tanh, {x}); }
Var relu(Var x) { return simple(OpKind::Relu, {x}); }

Var add(Var a, Var b) {
    require_same_shape(same_graph(a, b).value(a.id), b.value(), "add");
    return simple(OpKind::Add, {a, b});
}

Var mul(Var a, Var b) {
    require_same_shape(same_graph(a, b).value(a.id), b.value(), "mul");
    return simple(OpKind::Mul, {a, b});
}

Var scale(Var x, double factor) { return simple(OpKind::Scale, {x}, factor); }
Var shift(Var x, double offset) { return simple(OpKind::Shift, {x}, offset); }
Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }
Var sum(Var x) { return simple(OpKind::Sum, {x}); }
Var mean(Var x) { return simple(OpKind::Mean, {x}); }

Var squared_error(Var a, Var b) {
    require_same_shape(same_graph(a, b).value(a.id), b.value(), "squared_error");
    return simple(OpKind::SquaredError, {a, b});
}

Var exp(Var x) { return simple(OpKind::Exp, {x}); }

Var log(Var x) {
    for (double v : x.value().values()) {
        if (!(v > 0.0)) throw NumericError("log of non-positive value");
    }
    return simple(OpKind::Log, {x});
}

Var detach(Var x) { return simple(OpKind::Detach, {x}); }

Var gather_rows(Var table, std::vector<std::size_t> indices) {
    Graph& g = graph_of(table);
    auto value = gather_value(g.value(table.id), indices);
    return g.record(OpKind::GatherRows, {table.id}, std::move(value), std::move(indices));
}

Var straight_through(Var x, Tensor forward_value) {
    Graph& g = graph_of(x);
    require_same_shape(g.value(x.id), forward_value, "straight_through");
    return g.record(OpKind::StraightThrough, {x.id}, std::move(forward_value));
}

}  // namespace dae
