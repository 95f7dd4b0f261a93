#include "tabdistill/distill/kip.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tabdistill/distill/clustering.hpp"
#include "tabdistill/distill/ntk.hpp"
#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/optim.hpp"

namespace tabdistill::distill {

void KipConfig::validate() const {
    if (epochs == 0) throw ConfigError("kip: epochs must be at least 1");
    if (ridge && !(*ridge > 0.0)) throw ConfigError("kip: ridge must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("kip: learning rate must be positive");
}

double KipConfig::resolved_ridge(std::size_t distilled_rows) const {
    return ridge ? *ridge : 1e-6 * static_cast<double>(distilled_rows);
}

nlohmann::json KipConfig::to_json() const {
    nlohmann::json j = {{"epochs", epochs},           {"width", width},
                        {"learn_labels", learn_labels}, {"learning_rate", learning_rate},
                        {"batch_size", batch_size}};
    j["ridge"] = ridge ? nlohmann::json(*ridge) : nlohmann::json(nullptr);
    return j;
}

KipConfig KipConfig::from_json(const nlohmann::json& j) {
    KipConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs") value.get_to(c.epochs);
        else if (key == "width") value.get_to(c.width);
        else if (key == "ridge") c.ridge = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
        else if (key == "learn_labels") value.get_to(c.learn_labels);
        else if (key == "learning_rate") value.get_to(c.learning_rate);
        else if (key == "batch_size") value.get_to(c.batch_size);
        else throw ConfigError("unknown kip config key '" + key + "'");
    }
    c.validate();
    return c;
}

Matrix kip_targets(std::span<const int> labels, std::size_t num_classes) {
    if (num_classes < 2) throw ContractError("kip_targets: need at least two classes");
    const bool binary = num_classes == 2;
    Matrix t(labels.size(), binary ? 1 : num_classes, binary ? 0.0 : -1.0 / static_cast<double>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
            throw ContractError("kip_targets: label out of range at row " + std::to_string(i));
        if (binary) t(i, 0) = y == 1 ? 1.0 : -1.0;
        else t(i, static_cast<std::size_t>(y)) += 1.0;
    }
    return t;
}

std::vector<int> kip_decide(const Matrix& predictions, std::size_t num_classes) {
    const bool binary = num_classes == 2;
    if (predictions.cols() != (binary ? 1 : num_classes))
        throw DimensionError("kip_decide: " + std::to_string(predictions.cols()) + " outputs for " +
                             std::to_string(num_classes) + " classes");
    std::vector<int> out(predictions.rows());
    for (std::size_t i = 0; i < predictions.rows(); ++i) {
        if (binary) {
            out[i] = predictions(i, 0) > 0.0 ? 1 : 0;
            continue;
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < num_classes; ++c)
            if (predictions(i, c) > predictions(i, best)) best = c;
        out[i] = static_cast<int>(best);
    }
    return out;
}

Matrix kip_predict(const Matrix& distilled, const Matrix& distilled_targets, const Matrix& query, double ridge) {
    if (!(ridge > 0.0)) throw ContractError("kip_predict: ridge must be positive");
    if (distilled.rows() != distilled_targets.rows())
        throw DimensionError("kip_predict: target rows differ from distilled rows");
    Matrix kbb = ntk(distilled, distilled);
    for (std::size_t i = 0; i < kbb.rows(); ++i) kbb(i, i) += ridge;
    return matmul(ntk(query, distilled), cholesky_solve(kbb, distilled_targets));
}

ad::Var kip_loss(ad::Var distilled, ad::Var distilled_targets, const Matrix& x, const Matrix& targets,
                 double ridge) {
    if (!(ridge > 0.0)) throw ContractError("kip_loss: ridge must be positive");
    if (x.rows() != targets.rows()) throw DimensionError("kip_loss: target rows differ from input rows");
    ad::Graph& g = *distilled.graph;
    const std::size_t n = distilled.rows();
    const ad::Var kbb = ad::add(ntk(distilled, distilled), g.constant(Matrix::identity(n) * ridge));
    const ad::Var coef = ad::spd_solve(kbb, distilled_targets);
    const ad::Var pred = ad::matmul(ntk(g.constant(x), distilled), coef);
    return ad::mean(ad::square(ad::sub(pred, g.constant(targets))));
}

KipResult distill_kip(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                      const KipConfig& config, std::uint64_t seed) {
    config.validate();
    DistilledSet init = distill_random(x, y, num_classes, ipc, seed);
    const Matrix targets = kip_targets(y, num_classes);
    const double ridge = config.resolved_ridge(init.size());

    ParamMap params;
    params.add("distilled", init.features);
    params.add("targets", kip_targets(init.labels, num_classes));
    Optimizer opt({.kind = OptimizerKind::adam, .learning_rate = config.learning_rate});

    const bool batched = config.batch_size > 0 && config.batch_size < x.rows();
    Rng batch_rng = Rng(seed).derive(1);
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    KipResult result;
    for (std::size_t step = 0;; ++step) {
        Matrix bx, by;
        if (batched) {
            batch_rng.shuffle(std::span<std::size_t>(order));
            const std::span<const std::size_t> idx(order.data(), config.batch_size);
            bx = select_rows(x, idx);
            by = select_rows(targets, idx);
        }
        ad::Graph g;
        const ad::Var xbar = g.parameter(params.at("distilled"));
        const ad::Var ybar =
            config.learn_labels ? g.parameter(params.at("targets")) : g.constant(params.at("targets"));
        const ad::Var loss = kip_loss(xbar, ybar, batched ? bx : x, batched ? by : targets, ridge);
        const double value = loss.value()(0, 0);
        if (!std::isfinite(value)) throw NumericalError("kip: non-finite loss at step " + std::to_string(step));
        result.loss_history.push_back(value);
        if (step == config.epochs) break;
        g.backward(loss);
        GradientMap grads;
        grads.add("distilled", g.grad(xbar));
        if (config.learn_labels) grads.add("targets", g.grad(ybar));
        opt.step(params, grads);
    }

    result.set = std::move(init);
    result.set.features = params.at("distilled");
    result.set.method = Method::kip;
    result.set.output = OutputVariant::as_is;
    result.set.source_indices.clear();
    result.learned_targets = params.at("targets");
    return result;
}

}  // namespace tabdistill::distill
