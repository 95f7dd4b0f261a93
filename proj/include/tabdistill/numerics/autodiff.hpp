#pragma once

// ---------------------------------------------------------------------------
// Tape-based reverse-mode differentiation over Matrix values.
//
// A Graph owns a tape of nodes appended in forward order. Every primitive
// computes its value eagerly and records a backward closure; backward()
// walks the tape in exact reverse order, accumulating gradients only into
// nodes that (transitively) depend on a parameter.
//
// The primitive set is exactly what the encoders, the distillation
// objectives and the classifiers need. There is no implicit broadcasting:
// row-broadcast bias addition and per-row scaling are separate primitives.
// Modules with specialised kernels (NTK, ridge solves) register their own
// primitives through Graph::record.
// ---------------------------------------------------------------------------

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tabdistill/numerics/matrix.hpp"
#include "tabdistill/numerics/params.hpp"

namespace tabdistill::ad {

class Graph;

struct Var {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

// Contiguous slot range of one feature group inside a D-wide row.
struct GroupSpan {
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Parameters registered on a graph, addressable by name.
class BoundParams {
public:
    void add(std::string name, Var v);
    Var operator[](std::string_view name) const;
    bool contains(std::string_view name) const noexcept;
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Var>& vars() const noexcept { return vars_; }

private:
    std::vector<std::string> names_;
    std::vector<Var> vars_;
};

class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var parameter(Matrix value);
    Var constant(Matrix value);
    // Registers every entry of `params` as a parameter leaf.
    BoundParams bind(const ParamMap& params);

    // Appends a derived node. `parents` are the nodes the backward closure
    // may accumulate into.
    Var record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward,
               const char* op_name);

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    const char* op_name(std::size_t id) const { return nodes_[id].op; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // Gradient of the node computed by the last backward(); zero-filled for
    // nodes that received no gradient.
    Matrix grad(Var v) const;
    // Read access to the upstream gradient inside a backward closure.
    const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }
    // Adds `g` into the gradient buffer of node `id` (ignored when the node
    // does not require a gradient).
    void accumulate(std::size_t id, const Matrix& g);
    // Accumulation buffer of node `id`, allocated on first use.
    Matrix& grad_buffer(std::size_t id);

    // Runs reverse-mode accumulation from a 1x1 loss node. Throws
    // ContractError when the loss is not scalar.
    void backward(Var loss);
    // Node ids in the order the last backward() visited them.
    const std::vector<std::size_t>& last_backward_order() const noexcept { return visited_; }

    ParamMap gradients(const BoundParams& params) const;

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool has_grad = false;
        bool requires_grad = false;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        const char* op = "";
    };

    std::vector<Node> nodes_;
    std::vector<std::size_t> visited_;
};

// --- primitives -------------------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                       // elementwise
Var scale(Var a, double s);
Var add_bias(Var a, Var bias);               // bias is 1 x cols, added to each row
Var scale_rows(Var a, std::vector<double> factors);  // row i multiplied by factors[i]
Var relu(Var a);
Var sum(Var a);                              // 1x1
Var mean(Var a);                             // 1x1
Var sum_rows(Var a);                         // 1 x cols column sums
Var row_softmax(Var a);
Var group_softmax(Var a, std::span<const GroupSpan> groups);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(Var a, Var b);
Var gather_rows(Var a, std::vector<std::size_t> indices);
Var square(Var a);

// 0/1 mask of the positive entries of `a`, recorded as a constant.
Var relu_mask(Var a);

// Mean over rows of softmax cross-entropy (natural log) against integer labels.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

// Mean over rows of Σ_g weight_g · (−ln softmax(logits_g)[true_g]) / n_groups,
// where true_g is the hot slot of `targets` inside group g. The per-slot
// probability is floored at `min_prob` (the gradient through a floored
// entry is zero).
Var grouped_cross_entropy(Var logits, const Matrix& targets, std::span<const GroupSpan> groups,
                          std::span<const double> weights, double min_prob);

// Scaled dot-product attention inside consecutive blocks of `tokens` rows.
// q, k, v are (blocks·tokens) x (heads·head_dim); output has the same shape.
Var grouped_attention(Var q, Var k, Var v, std::size_t tokens, std::size_t heads,
                      std::size_t head_dim);

// 1 − cos(a, b) over the flattened tensors; 0 if both are zero, 1 if only
// one is (no gradient in the zero cases).
Var cosine_distance(Var a, Var b);

// Solves a·x = b for symmetric positive definite a.
Var spd_solve(Var a, Var b);

}  // namespace tabdistill::ad
