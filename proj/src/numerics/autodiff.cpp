#include "tabdistill/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tabdistill::ad {

namespace {

Graph& graph_of(Var a) {
    if (a.graph == nullptr) throw ContractError("autodiff: variable is not attached to a graph");
    return *a.graph;
}

Graph& graph_of(Var a, Var b) {
    if (a.graph != b.graph) throw ContractError("autodiff: operands belong to different graphs");
    return graph_of(a);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
}

}  // namespace

const Matrix& Var::value() const { return graph_of(*this).value(*this); }

void BoundParams::add(std::string name, Var v) {
    names_.push_back(std::move(name));
    vars_.push_back(v);
}

Var BoundParams::operator[](std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return vars_[i];
    throw ContractError("BoundParams: no parameter named '" + std::string(name) + "'");
}

bool BoundParams::contains(std::string_view name) const noexcept {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Var Graph::parameter(Matrix value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    n.op = "parameter";
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Graph::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    n.op = "constant";
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

BoundParams Graph::bind(const ParamMap& params) {
    BoundParams bound;
    for (const auto& [name, value] : params) bound.add(name, parameter(value));
    return bound;
}

Var Graph::record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward,
                  const char* op_name) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                  [&](std::size_t p) { return nodes_[p].requires_grad; });
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(backward);
    n.op = op_name;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Matrix Graph::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.has_grad) return n.grad;
    return Matrix(n.value.rows(), n.value.cols());
}

Matrix& Graph::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Matrix(n.value.rows(), n.value.cols());
        n.has_grad = true;
    }
    return n.grad;
}

void Graph::accumulate(std::size_t id, const Matrix& g) {
    if (!nodes_[id].requires_grad) return;
    Matrix& buf = grad_buffer(id);
    if (!buf.same_shape(g))
        throw DimensionError(std::string("backward: gradient shape ") + g.shape_string() +
                             " does not match node '" + nodes_[id].op + "' " +
                             buf.shape_string());
    buf += g;
}

void Graph::backward(Var loss) {
    if (loss.graph != this) throw ContractError("backward: loss belongs to another graph");
    const Matrix& lv = nodes_[loss.id].value;
    if (lv.rows() != 1 || lv.cols() != 1)
        throw ContractError("backward: loss must be scalar, got " + lv.shape_string());
    for (auto& n : nodes_) {
        n.has_grad = false;
        n.grad = Matrix();
    }
    visited_.clear();
    grad_buffer(loss.id)(0, 0) = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        visited_.push_back(id);
        Node& n = nodes_[id];
        if (!n.has_grad || !n.requires_grad || !n.backward) continue;
        n.backward(*this, id);
    }
}

ParamMap Graph::gradients(const BoundParams& params) const {
    ParamMap out;
    for (std::size_t i = 0; i < params.names().size(); ++i)
        out.add(params.names()[i], grad(params.vars()[i]));
    return out;
}

// --- primitives -------------------------------------------------------------

Var matmul(Var a, Var b) {
    Graph& g = graph_of(a, b);
    Matrix out = tabdistill::matmul(a.value(), b.value());
    const std::size_t ia = a.id, ib = b.id;
    return g.record(std::move(out), {ia, ib},
                    [ia, ib](Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        if (gr.requires_grad(ia))
                            gr.accumulate(ia, matmul_nt(up, gr.value(ib)));
                        if (gr.requires_grad(ib))
                            gr.accumulate(ib, matmul_tn(gr.value(ia), up));
                    },
                    "matmul");
}

Var transpose(Var a) {
    Graph& g = graph_of(a);
    const std::size_t ia = a.id;
    return g.record(tabdistill::transpose(a.value()), {ia},
                    [ia](Graph& gr, std::size_t self) {
                        gr.accumulate(ia, tabdistill::transpose(gr.upstream(self)));
                    },
                    "transpose");
}

Var add(Var a, Var b) {
    Graph& g = graph_of(a, b);
    require_same_shape(a.value(), b.value(), "add");
    const std::size_t ia = a.id, ib = b.id;
    return g.record(a.value() + b.value(), {ia, ib},
                    [ia, ib](Graph& gr, std::size_t self) {
                        gr.accumulate(ia, gr.upstream(self));
                        gr.accumulate(ib, gr.upstream(self));
                    },
                    "add");
}

Var sub(Var a, Var b) {
    Graph& g = graph_of(a, b);
    require_same_shape(a.value(), b.value(), "sub");
    const std::size_t ia = a.id, ib = b.id;
    return g.record(a.value() - b.value(), {ia, ib},
                    [ia, ib](Graph& gr, std::size_t self) {
                        gr.accumulate(ia, gr.upstream(self));
                        if (gr.requires_grad(ib)) gr.accumulate(ib, gr.upstream(self) * -1.0);
                    },
                    "sub");
}

Var mul(Var a, Var b) {
    Graph& g = graph_of(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return g.record(hadamard(a.value(), b.value()), {ia, ib},
                    [ia, ib](Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        if (gr.requires_grad(ia)) gr.accumulate(ia, hadamard(up, gr.value(ib)));
                        if (gr.requires_grad(ib)) gr.accumulate(ib, hadamard(up, gr.value(ia)));
                    },
                    "mul");
}

Var scale(Var a, double s) {
    Graph& g = graph_of(a);
    const std::size_t ia = a.id;
    return g.record(a.value() * s, {ia},
                    [ia, s](Graph& gr, std::size_t self) {
                        gr.accumulate(ia, gr.upstream(self) * s);
                    },
                    "scale");
}

Var add_bias(Var a, Var bias) {
    Graph& g = graph_of(a, bias);
    const Matrix& av = a.value();
    const Matrix& bv = bias.value();
    if (bv.rows() != 1 || bv.cols() != av.cols())
        throw DimensionError("add_bias: bias " + bv.shape_string() + " for input " +
                             av.shape_string());
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv(0, j);
    const std::size_t ia = a.id, ib = bias.id;
    return g.record(std::move(out), {ia, ib},
                    [ia, ib](Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        gr.accumulate(ia, up);
                        if (gr.requires_grad(ib)) {
                            Matrix db(1, up.cols());
                            for (std::size_t i = 0; i < up.rows(); ++i)
                                for (std::size_t j = 0; j < up.cols(); ++j) db(0, j) += up(i, j);
                            gr.accumulate(ib, db);
                        }
                    },
                    "add_bias");
}

Var scale_rows(Var a, std::vector<double> factors) {
    Graph& g = graph_of(a);
    const Matrix& av = a.value();
    if (factors.size() != av.rows())
        throw DimensionError("scale_rows: " + std::to_string(factors.size()) +
                             " factors for input " + av.shape_string());
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (double& v : out.row(i)) v *= factors[i];
    const std::size_t ia = a.id;
    return g.record(std::move(out), {ia},
                    [ia, factors = std::move(factors)](Graph& gr, std::size_t self) {
                        Matrix d = gr.upstream(self);
                        for (std::size_t i = 0; i < d.rows(); ++i)
                            for (double& v : d.row(i)) v *= factors[i];
                        gr.accumulate(ia, d);
                    },
                    "scale_rows");
}

Var relu(Var a) {
    Graph& g = graph_of(a);
    Matrix out = a.value();
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    const std::size_t ia = a.id;
    return g.record(std::move(out), {ia},
                    [ia](Graph& gr, std::size_t self) {
                        Matrix d = gr.upstream(self);
                        const Matrix& x = gr.value(ia);
                        for (std::size_t i = 0; i < d.size(); ++i)
                            if (!(x.data()[i] > 0.0)) d.data()[i] = 0.0;
                        gr.accumulate(ia, d);
                    },
                    "relu");
}

Var relu_mask(Var a) {
    Matrix m = a.value();
    for (double& v : m.data()) v = v > 0.0 ? 1.0 : 0.0;
    return graph_of(a).constant(std::move(m));
}

Var sum(Var a) {
    Graph& g = graph_of(a);
    const std::size_t ia = a.id;
    return g.record(Matrix(1, 1, tabdistill::sum(a.value())), {ia},
                    [ia](Graph& gr, std::size_t self) {
                        const double up = gr.upstream(self)(0, 0);
                        const Matrix& x = gr.value(ia);
                        gr.accumulate(ia, Matrix(x.rows(), x.cols(), up));
                    },
                    "sum");
}

Var mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw DimensionError("mean: empty input");
    return scale(sum(a), 1.0 / n);
}

Var sum_rows(Var a) {
    Graph& g = graph_of(a);
    const Matrix& av = a.value();
    Matrix out(1, av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
    const std::size_t ia = a.id;
    return g.record(std::move(out), {ia},
                    [ia](Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        const Matrix& x = gr.value(ia);
                        Matrix d(x.rows(), x.cols());
                        for (std::size_t i = 0; i < d.rows(); ++i)
                            for (std::size_t j = 0; j < d.cols(); ++j) d(i, j) = up(0, j);
                        gr.accumulate(ia, d);
                    },
                    "sum_rows");
}

Var square(Var a) {
    Graph& g = graph_of(a);
    Matrix out = hadamard(a.value(), a.value());
    const std::size_t ia = a.id;
    return g.record(std::move(out), {ia},
                    [ia](Graph& gr, std::size_t self) {
                        Matrix d = hadamard(gr.upstream(self), gr.value(ia));
                        gr.accumulate(ia, d * 2.0);
                    },
                    "square");
}

Var group_softmax(Var a, std::span<const GroupSpan> groups) {
    Graph& g = graph_of(a);
    const Matrix& av = a.value();
    for (const auto& gs : groups)
        if (gs.size == 0 || gs.offset + gs.size > av.cols())
            throw DimensionError("group_softmax: group out of range for " + av.shape_string());
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        for (const auto& gs : groups) {
            auto seg = row.subspan(gs.offset, gs.size);
            const double mx = *std::max_element(seg.begin(), seg.end());
            double z = 0.0;
            for (double& v : seg) {
                v = std::exp(v - mx);
                z += v;
            }
            for (double& v : seg) v /= z;
        }
    }
    const std::size_t ia = a.id;
    std::vector<GroupSpan> gcopy(groups.begin(), groups.end());
    return g.record(std::move(out), {ia},
                    [ia, gcopy = std::move(gcopy)](Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        const Matrix& p = gr.value(self);
                        Matrix d(p.rows(), p.cols());
                        for (std::size_t i = 0; i < p.rows(); ++i) {
                            for (const auto& gs : gcopy) {
                                double s = 0.0;
                                for (std::size_t j = gs.offset; j < gs.offset + gs.size; ++j)
                                    s += up(i, j) * p(i, j);
                                for (std::size_t j = gs.offset; j < gs.offset + gs.size; ++j)
                                    d(i, j) = p(i, j) * (up(i, j) - s);
                            }
                        }
                        gr.accumulate(ia, d);
                    },
                    "group_softmax");
}

Var row_softmax(Var a) {
    const GroupSpan all{0, a.value().cols()};
    return group_softmax(a, std::span<const GroupSpan>(&all, 1));
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    Graph& g = graph_of(parts[0]);
    const std::size_t rows = parts[0].value().rows();
    std::size_t cols = 0;
    std::vector<std::size_t> ids, widths;
    for (const Var& p : parts) {
        graph_of(parts[0], p);
        if (p.value().rows() != rows)
            throw DimensionError("concat_cols: row count mismatch " + p.value().shape_string());
        ids.push_back(p.id);
        widths.push_back(p.value().cols());
        cols += p.value().cols();
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Matrix& v = p.value();
        for (std::size_t i = 0; i < rows; ++i)
            std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + off);
        off += v.cols();
    }
    std::vector<std::size_t> parents = ids;
    return g.record(std::move(out), std::move(parents),
                    [ids, widths](Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        std::size_t o = 0;
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                            if (gr.requires_grad(ids[k])) {
                                Matrix d(up.rows(), widths[k]);
                                for (std::size_t i = 0; i < up.rows(); ++i)
                                    for (std::size_t j = 0; j < widths[k]; ++j)
                                        d(i, j) = up(i, o + j);
                                gr.accumulate(ids[k], d);
                            }
                            o += widths[k];
                        }
                    },
                    "concat_cols");
}

Var concat_rows(Var a, Var b) {
    Graph& g = graph_of(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.cols())
        throw DimensionError("concat_rows: " + av.shape_string() + " vs " + bv.shape_string());
    std::vector<double> data(av.data().begin(), av.data().end());
    data.insert(data.end(), bv.data().begin(), bv.data().end());
    Matrix out(av.rows() + bv.rows(), av.cols(), std::move(data));
    const std::size_t ia = a.id, ib = b.id, ra = av.rows(), rb = bv.rows();
    return g.record(std::move(out), {ia, ib},
                    [ia, ib, ra, rb](Graph& gr, std::size_t self) {
                        const Matrix& up = gr.upstream(self);
                        const std::size_t c = up.cols();
                        auto block = [&](std::size_t r0, std::size_t nr) {
                            return Matrix(nr, c,
                                          std::vector<double>(up.data().begin() + r0 * c,
                                                              up.data().begin() + (r0 + nr) * c));
                        };
                        if (gr.requires_grad(ia)) gr.accumulate(ia, block(0, ra));
                        if (gr.requires_grad(ib)) gr.accumulate(ib, block(ra, rb));
                    },
                    "concat_rows");
}

Var gather_rows(Var a, std::vector<std::size_t> indices) {
    Graph& g = graph_of(a);
    Matrix out = select_rows(a.value(), indices);
    const std::size_t ia = a.id;
    return g.record(std::move(out), {ia},
                    [ia, indices = std::move(indices)](Graph& gr, std::size_t self) {
                        if (!gr.requires_grad(ia)) return;
                        const Matrix& up = gr.upstream(self);
                        Matrix& d = gr.grad_buffer(ia);
                        for (std::size_t i = 0; i < indices.size(); ++i) {
                            auto dst = d.row(indices[i]);
                            auto src = up.row(i);
                            for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                        }
                    },
                    "gather_rows");
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
    Graph& g = graph_of(logits);
    const Matrix& z = logits.value();
    if (labels.size() != z.rows())
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for logits " + z.shape_string());
    Matrix prob(z.rows(), z.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= z.cols())
            throw ContractError("softmax_cross_entropy: label " + std::to_string(y) +
                                " out of range");
        const auto row = z.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            prob(i, j) = std::exp(row[j] - mx);
            s += prob(i, j);
        }
        for (std::size_t j = 0; j < row.size(); ++j) prob(i, j) /= s;
        total += std::log(s) + mx - row[static_cast<std::size_t>(y)];
    }
    const double n = static_cast<double>(z.rows());
    std::vector<int> ys(labels.begin(), labels.end());
    const std::size_t iz = logits.id;
    return g.record(Matrix(1, 1, total / n), {iz},
                    [iz, prob = std::move(prob), ys = std::move(ys), n](Graph& gr,
                                                                        std::size_t self) {
                        const double up = gr.upstream(self)(0, 0) / n;
                        Matrix d = prob;
                        for (std::size_t i = 0; i < d.rows(); ++i)
                            d(i, static_cast<std::size_t>(ys[i])) -= 1.0;
                        gr.accumulate(iz, d * up);
                    },
                    "softmax_cross_entropy");
}

Var grouped_cross_entropy(Var logits, const Matrix& targets, std::span<const GroupSpan> groups,
                          std::span<const double> weights, double min_prob) {
    Graph& g = graph_of(logits);
    const Matrix& z = logits.value();
    require_same_shape(z, targets, "grouped_cross_entropy");
    if (weights.size() != groups.size())
        throw DimensionError("grouped_cross_entropy: weight count does not match group count");
    if (groups.empty() || z.rows() == 0)
        throw DimensionError("grouped_cross_entropy: empty input");
    const double max_nll = -std::log(min_prob);
    const double norm = 1.0 / (static_cast<double>(z.rows()) * static_cast<double>(groups.size()));

    // d(loss)/d(logits) at unit upstream
    Matrix d(z.rows(), z.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        for (std::size_t k = 0; k < groups.size(); ++k) {
            const auto& gs = groups[k];
            std::size_t hot = gs.size;
            for (std::size_t j = 0; j < gs.size; ++j)
                if (targets(i, gs.offset + j) > 0.5) {
                    hot = j;
                    break;
                }
            if (hot == gs.size)
                throw ContractError("grouped_cross_entropy: row " + std::to_string(i) +
                                    " has no hot slot in group " + std::to_string(k));
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < gs.size; ++j) mx = std::max(mx, z(i, gs.offset + j));
            double s = 0.0;
            for (std::size_t j = 0; j < gs.size; ++j) s += std::exp(z(i, gs.offset + j) - mx);
            const double nll = std::log(s) + mx - z(i, gs.offset + hot);
            if (nll > max_nll) {
                total += weights[k] * max_nll;
                continue;
            }
            total += weights[k] * nll;
            const double w = weights[k] * norm;
            for (std::size_t j = 0; j < gs.size; ++j) {
                const double p = std::exp(z(i, gs.offset + j) - mx) / s;
                d(i, gs.offset + j) = w * (p - (j == hot ? 1.0 : 0.0));
            }
        }
    }
    const std::size_t iz = logits.id;
    return g.record(Matrix(1, 1, total * norm), {iz},
                    [iz, d = std::move(d)](Graph& gr, std::size_t self) {
                        gr.accumulate(iz, d * gr.upstream(self)(0, 0));
                    },
                    "grouped_cross_entropy");
}

Var grouped_attention(Var q, Var k, Var v, std::size_t tokens, std::size_t heads,
                      std::size_t head_dim) {
    Graph& g = graph_of(q, k);
    graph_of(q, v);
    const Matrix& qv = q.value();
    const Matrix& kv = k.value();
    const Matrix& vv = v.value();
    require_same_shape(qv, kv, "grouped_attention");
    require_same_shape(qv, vv, "grouped_attention");
    if (tokens == 0 || qv.rows() % tokens != 0 || qv.cols() != heads * head_dim)
        throw DimensionError("grouped_attention: input " + qv.shape_string() +
                             " incompatible with tokens/heads/head_dim");
    const std::size_t blocks = qv.rows() / tokens;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

    // attention weights per (block, head), each tokens x tokens
    std::vector<Matrix> probs(blocks * heads, Matrix(tokens, tokens));
    Matrix out(qv.rows(), qv.cols());
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t r0 = b * tokens;
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t c0 = h * head_dim;
            Matrix& p = probs[b * heads + h];
            for (std::size_t i = 0; i < tokens; ++i) {
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < tokens; ++j) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < head_dim; ++c)
                        s += qv(r0 + i, c0 + c) * kv(r0 + j, c0 + c);
                    p(i, j) = s * inv_sqrt;
                    mx = std::max(mx, p(i, j));
                }
                double z = 0.0;
                for (std::size_t j = 0; j < tokens; ++j) {
                    p(i, j) = std::exp(p(i, j) - mx);
                    z += p(i, j);
                }
                for (std::size_t j = 0; j < tokens; ++j) p(i, j) /= z;
                for (std::size_t j = 0; j < tokens; ++j) {
                    const double w = p(i, j);
                    for (std::size_t c = 0; c < head_dim; ++c)
                        out(r0 + i, c0 + c) += w * vv(r0 + j, c0 + c);
                }
            }
        }
    }
    const std::size_t iq = q.id, ik = k.id, iv = v.id;
    return g.record(
        std::move(out), {iq, ik, iv},
        [iq, ik, iv, tokens, heads, head_dim, inv_sqrt, probs = std::move(probs)](
            Graph& gr, std::size_t self) {
            const Matrix& up = gr.upstream(self);
            const Matrix& qm = gr.value(iq);
            const Matrix& km = gr.value(ik);
            const Matrix& vm = gr.value(iv);
            Matrix dq(qm.rows(), qm.cols()), dk(km.rows(), km.cols()), dv(vm.rows(), vm.cols());
            const std::size_t blocks = qm.rows() / tokens;
            Matrix dp(tokens, tokens);
            for (std::size_t b = 0; b < blocks; ++b) {
                const std::size_t r0 = b * tokens;
                for (std::size_t h = 0; h < heads; ++h) {
                    const std::size_t c0 = h * head_dim;
                    const Matrix& p = probs[b * heads + h];
                    for (std::size_t i = 0; i < tokens; ++i) {
                        for (std::size_t j = 0; j < tokens; ++j) {
                            double s = 0.0;
                            for (std::size_t c = 0; c < head_dim; ++c) {
                                s += up(r0 + i, c0 + c) * vm(r0 + j, c0 + c);
                                dv(r0 + j, c0 + c) += p(i, j) * up(r0 + i, c0 + c);
                            }
                            dp(i, j) = s;
                        }
                        double rs = 0.0;
                        for (std::size_t j = 0; j < tokens; ++j) rs += dp(i, j) * p(i, j);
                        for (std::size_t j = 0; j < tokens; ++j) {
                            const double ds = p(i, j) * (dp(i, j) - rs) * inv_sqrt;
                            if (ds == 0.0) continue;
                            for (std::size_t c = 0; c < head_dim; ++c) {
                                dq(r0 + i, c0 + c) += ds * km(r0 + j, c0 + c);
                                dk(r0 + j, c0 + c) += ds * qm(r0 + i, c0 + c);
                            }
                        }
                    }
                }
            }
            gr.accumulate(iq, dq);
            gr.accumulate(ik, dk);
            gr.accumulate(iv, dv);
        },
        "grouped_attention");
}

Var cosine_distance(Var a, Var b) {
    Graph& g = graph_of(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    require_same_shape(av, bv, "cosine_distance");
    // Squared norms share the dot-product summation order, so a == b gives
    // cos == 1 exactly (sqrt(x·x) == x in IEEE arithmetic).
    const double saa = dot(av, av), sbb = dot(bv, bv);
    const double na = std::sqrt(saa), nb = std::sqrt(sbb);
    if (na == 0.0 || nb == 0.0) {
        const double value = (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
        return g.record(Matrix(1, 1, value), {a.id, b.id}, [](Graph&, std::size_t) {},
                        "cosine_distance");
    }
    const double cosv = std::clamp(dot(av, bv) / std::sqrt(saa * sbb), -1.0, 1.0);
    const std::size_t ia = a.id, ib = b.id;
    return g.record(Matrix(1, 1, 1.0 - cosv), {ia, ib},
                    [ia, ib, na, nb, cosv](Graph& gr, std::size_t self) {
                        const double up = gr.upstream(self)(0, 0);
                        const Matrix& x = gr.value(ia);
                        const Matrix& y = gr.value(ib);
                        // d(1 - cos)/dx = -(y/(|x||y|) - cos·x/|x|²)
                        if (gr.requires_grad(ia))
                            gr.accumulate(ia, (y * (1.0 / (na * nb)) - x * (cosv / (na * na))) *
                                                  -up);
                        if (gr.requires_grad(ib))
                            gr.accumulate(ib, (x * (1.0 / (na * nb)) - y * (cosv / (nb * nb))) *
                                                  -up);
                    },
                    "cosine_distance");
}

Var spd_solve(Var a, Var b) {
    Graph& g = graph_of(a, b);
    Matrix lower = cholesky_factor(a.value());
    Matrix x = cholesky_substitute(lower, b.value());
    const std::size_t ia = a.id, ib = b.id;
    return g.record(x, {ia, ib},
                    [ia, ib, lower = std::move(lower)](Graph& gr, std::size_t self) {
                        // x = A⁻¹B: dB = A⁻¹·dX, dA = −dB·xᵀ
                        Matrix db = cholesky_substitute(lower, gr.upstream(self));
                        if (gr.requires_grad(ia))
                            gr.accumulate(ia, matmul_nt(db, gr.value(self)) * -1.0);
                        gr.accumulate(ib, db);
                    },
                    "spd_solve");
}

}  // namespace tabdistill::ad
