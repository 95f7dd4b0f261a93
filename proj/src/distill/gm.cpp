#include "tabdistill/distill/gm.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tabdistill/distill/clustering.hpp"
#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/optim.hpp"

namespace tabdistill::distill {

namespace {

std::string layer_name(std::size_t i, const char* part) { return "layer" + std::to_string(i) + "." + part; }

std::size_t backbone_layers(const ParamMap& theta) {
    if (theta.empty() || theta.size() % 2 != 0) throw ContractError("backbone: malformed parameter map");
    return theta.size() / 2;
}

Matrix one_hot(std::span<const int> labels, std::size_t classes) {
    Matrix m(labels.size(), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw ContractError("backbone: label out of range at row " + std::to_string(i));
        m(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return m;
}

}  // namespace

void GmConfig::validate() const {
    if (epochs == 0 || hidden == 0 || depth == 0 || inner_steps == 0)
        throw ConfigError("gm: epochs, hidden width, depth and inner steps must be positive");
    if (!(lr_mlp > 0.0) || !(lr_data > 0.0)) throw ConfigError("gm: learning rates must be positive");
    if (!(momentum_data > 0.0) || momentum_data >= 1.0) throw ConfigError("gm: momentum must be in (0, 1)");
}

nlohmann::json GmConfig::to_json() const {
    return {{"epochs", epochs},   {"hidden", hidden},
            {"depth", depth},     {"lr_mlp", lr_mlp},
            {"lr_data", lr_data}, {"momentum_data", momentum_data},
            {"inner_steps", inner_steps}, {"init_seed", init_seed},
            {"real_batch", real_batch}};
}

GmConfig GmConfig::from_json(const nlohmann::json& j) {
    GmConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs") value.get_to(c.epochs);
        else if (key == "hidden") value.get_to(c.hidden);
        else if (key == "depth") value.get_to(c.depth);
        else if (key == "lr_mlp") value.get_to(c.lr_mlp);
        else if (key == "lr_data") value.get_to(c.lr_data);
        else if (key == "momentum_data") value.get_to(c.momentum_data);
        else if (key == "inner_steps") value.get_to(c.inner_steps);
        else if (key == "init_seed") value.get_to(c.init_seed);
        else if (key == "real_batch") value.get_to(c.real_batch);
        else throw ConfigError("unknown gm config key '" + key + "'");
    }
    c.validate();
    return c;
}

ParamMap init_backbone(std::size_t inputs, std::size_t hidden, std::size_t depth, std::size_t classes, Rng& rng) {
    if (inputs == 0 || hidden == 0 || classes == 0) throw ConfigError("backbone: zero width");
    ParamMap theta;
    std::size_t in = inputs;
    for (std::size_t l = 0; l <= depth; ++l) {
        const std::size_t out = l == depth ? classes : hidden;
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Matrix w(in, out), b(1, out);
        for (double& v : w.data()) v = rng.uniform(-bound, bound);
        for (double& v : b.data()) v = rng.uniform(-bound, bound);
        theta.add(layer_name(l, "w"), std::move(w));
        theta.add(layer_name(l, "b"), std::move(b));
        in = out;
    }
    return theta;
}

ad::Var backbone_loss(ad::Graph& g, const ad::BoundParams& theta, const Matrix& x, std::span<const int> labels) {
    const std::size_t layers = theta.names().size() / 2;
    ad::Var h = g.constant(x);
    for (std::size_t l = 0; l < layers; ++l) {
        h = ad::add_bias(ad::matmul(h, theta[layer_name(l, "w")]), theta[layer_name(l, "b")]);
        if (l + 1 < layers) h = ad::relu(h);
    }
    return ad::softmax_cross_entropy(h, labels);
}

std::vector<ad::Var> backbone_gradients_graph(ad::Graph& g, const ParamMap& theta, ad::Var x,
                                              std::span<const int> labels) {
    const std::size_t layers = backbone_layers(theta);
    const std::size_t n = x.rows();
    if (labels.size() != n) throw DimensionError("backbone: label count differs from row count");

    std::vector<ad::Var> acts{x}, pre;
    for (std::size_t l = 0; l < layers; ++l) {
        const ad::Var a = ad::add_bias(ad::matmul(acts.back(), g.constant(theta.at(layer_name(l, "w")))),
                                       g.constant(theta.at(layer_name(l, "b"))));
        pre.push_back(a);
        if (l + 1 < layers) acts.push_back(ad::relu(a));
    }
    const std::size_t classes = pre.back().cols();
    // ∂/∂Z of the mean cross-entropy: (softmax(Z) − Y)/n
    ad::Var delta = ad::scale(ad::sub(ad::row_softmax(pre.back()), g.constant(one_hot(labels, classes))),
                              1.0 / static_cast<double>(n));

    std::vector<ad::Var> grads(2 * layers);
    for (std::size_t l = layers; l-- > 0;) {
        grads[2 * l] = ad::matmul(ad::transpose(acts[l]), delta);
        grads[2 * l + 1] = ad::sum_rows(delta);
        if (l == 0) break;
        const ad::Var back = ad::matmul(delta, g.constant(transpose(theta.at(layer_name(l, "w")))));
        delta = ad::mul(back, ad::relu_mask(pre[l - 1]));
    }
    return grads;
}

GradientMap backbone_gradients(const ParamMap& theta, const Matrix& x, std::span<const int> labels) {
    ad::Graph g;
    const auto vars = backbone_gradients_graph(g, theta, g.constant(x), labels);
    GradientMap out;
    std::size_t k = 0;
    for (const auto& [name, m] : theta) out.add(name, vars[k++].value());
    return out;
}

double gradient_distance(const GradientMap& a, const GradientMap& b) {
    if (!a.same_layout(b)) throw ContractError("gradient_distance: parameter sets differ");
    ad::Graph g;
    std::vector<ad::Var> vars;
    for (const auto& [name, m] : b) vars.push_back(g.constant(m));
    return gradient_distance_graph(g, a, vars).value()(0, 0);
}

ad::Var gradient_distance_graph(ad::Graph& g, const GradientMap& reference, std::span<const ad::Var> gradients) {
    if (reference.size() != gradients.size() || reference.empty())
        throw ContractError("gradient_distance: parameter sets differ");
    ad::Var total;
    std::size_t k = 0;
    for (const auto& [name, m] : reference) {
        if (!m.same_shape(gradients[k].value()))
            throw ContractError("gradient_distance: shape mismatch for '" + name + "'");
        const ad::Var d = ad::cosine_distance(g.constant(m), gradients[k]);
        total = k == 0 ? d : ad::add(total, d);
        ++k;
    }
    return total;
}

GmResult distill_gm(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                    const GmConfig& config, std::uint64_t seed) {
    config.validate();
    return distill_gm_from(x, y, num_classes, distill_random(x, y, num_classes, ipc, seed), config, seed);
}

GmResult distill_gm_from(const Matrix& x, std::span<const int> y, std::size_t num_classes, DistilledSet init,
                         const GmConfig& config, std::uint64_t seed) {
    config.validate();
    init.validate();
    if (x.rows() != y.size()) throw DimensionError("gm: label count differs from row count");
    if (init.features.cols() != x.cols()) throw DimensionError("gm: distilled width differs from data width");

    ParamMap data;
    data.add("distilled", init.features);
    Optimizer opt({.kind = OptimizerKind::sgd_momentum, .learning_rate = config.lr_data,
                   .momentum = config.momentum_data});
    const Rng theta_base(mix_seed(seed, config.init_seed));
    Rng batch_rng = Rng(seed).derive(2);
    const bool batched = config.real_batch > 0 && config.real_batch < x.rows();
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    GmResult result;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng = theta_base.derive(epoch);
        ParamMap theta = init_backbone(x.cols(), config.hidden, config.depth, num_classes, rng);
        double epoch_distance = 0.0;
        for (std::size_t t = 0; t < config.inner_steps; ++t) {
            GradientMap real;
            if (batched) {
                batch_rng.shuffle(std::span<std::size_t>(order));
                const std::span<const std::size_t> idx(order.data(), config.real_batch);
                std::vector<int> by;
                for (auto i : idx) by.push_back(y[i]);
                real = backbone_gradients(theta, select_rows(x, idx), by);
            } else {
                real = backbone_gradients(theta, x, y);
            }

            ad::Graph g;
            const ad::Var r = g.parameter(data.at("distilled"));
            const auto synth = backbone_gradients_graph(g, theta, r, init.labels);
            const ad::Var d = gradient_distance_graph(g, real, synth);
            const double dv = d.value()(0, 0);
            if (!std::isfinite(dv))
                throw NumericalError("gm: non-finite distance at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(t));
            epoch_distance += dv;
            g.backward(d);
            GradientMap grad;
            grad.add("distilled", g.grad(r));
            opt.step(data, grad);

            for (auto& [name, m] : theta) m -= real.at(name) * config.lr_mlp;
        }
        result.distance_history.push_back(epoch_distance / static_cast<double>(config.inner_steps));
    }

    result.set = std::move(init);
    result.set.features = data.at("distilled");
    if (!result.set.features.all_finite()) throw NumericalError("gm: non-finite distilled features");
    result.set.method = Method::gm;
    result.set.output = OutputVariant::as_is;
    result.set.seed = seed;
    result.set.source_indices.clear();
    return result;
}

}  // namespace tabdistill::distill
