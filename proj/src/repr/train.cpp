#include "tabdistill/repr/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/optim.hpp"

namespace tabdistill::repr {

namespace {

// Stream tags for child RNGs derived from TrainConfig::seed.
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;
constexpr std::uint64_t kHeadStream = 3;

struct Objective {
    const Autoencoder& ae;
    double alpha = 0.0;  // 0 and no labels = reconstruction only
    bool supervised = false;

    ad::Var build(ad::Graph& g, const ad::BoundParams& p, const Matrix& b, std::span<const int> y, Rng* rng) const {
        const ad::Var z = ae.encode_graph(g, p, b, rng);
        ad::Var loss = recon_loss_graph(ae.decode_logits_graph(g, p, z), b, ae.homogenizer());
        if (supervised) loss = ad::add(loss, ad::scale(ad::softmax_cross_entropy(ae.head_logits_graph(g, p, z), y), alpha));
        return loss;
    }

    double value(const Matrix& b, std::span<const int> y) const {
        ad::Graph g;
        const auto p = g.bind(ae.params());
        return build(g, p, b, y, nullptr).value()(0, 0);
    }
};

TrainResult run_training(Autoencoder& ae, const Objective& obj, const Matrix& train, std::span<const int> ytrain,
                         const Matrix& val, std::span<const int> yval, const TrainConfig& cfg) {
    cfg.validate();
    if (train.rows() == 0) throw ContractError("training: empty train matrix");
    const bool has_val = val.rows() > 0;

    Optimizer opt({.kind = OptimizerKind::adam, .learning_rate = cfg.learning_rate, .weight_decay = cfg.weight_decay});
    const Rng base(cfg.seed);
    Rng shuffle_rng = base.derive(kShuffleStream);
    Rng dropout_rng = base.derive(kDropoutStream);
    Rng* drop = ae.config().dropout > 0.0 ? &dropout_rng : nullptr;

    TrainResult result;
    auto evaluate = [&](std::size_t epoch) {
        const double tl = obj.value(train, ytrain);
        const double vl = has_val ? obj.value(val, yval) : tl;
        if (!std::isfinite(tl) || !std::isfinite(vl))
            throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        result.train_loss.push_back(tl);
        result.val_loss.push_back(vl);
        return vl;
    };

    double best = evaluate(0);
    ParamMap best_params = ae.params();
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> batch_labels;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            const Matrix b = select_rows(train, idx);
            batch_labels.clear();
            if (obj.supervised)
                for (auto i : idx) batch_labels.push_back(ytrain[i]);
            ad::Graph g;
            const auto p = g.bind(ae.params());
            const ad::Var loss = obj.build(g, p, b, batch_labels, drop);
            if (!std::isfinite(loss.value()(0, 0)))
                throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
            g.backward(loss);
            opt.step(ae.params(), g.gradients(p));
        }
        result.epochs_run = epoch;
        const double vl = evaluate(epoch);
        if (vl < best) {
            best = vl;
            best_params = ae.params();
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    ae.params() = std::move(best_params);
    return result;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
    if (patience == 0) throw ConfigError("patience must be at least 1");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"epochs", epochs},   {"batch_size", batch_size}, {"learning_rate", learning_rate},
            {"weight_decay", weight_decay}, {"alpha", alpha}, {"patience", patience}, {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs") value.get_to(c.epochs);
        else if (key == "batch_size") value.get_to(c.batch_size);
        else if (key == "learning_rate") value.get_to(c.learning_rate);
        else if (key == "weight_decay") value.get_to(c.weight_decay);
        else if (key == "alpha") value.get_to(c.alpha);
        else if (key == "patience") value.get_to(c.patience);
        else if (key == "seed") value.get_to(c.seed);
        else throw ConfigError("unknown training config key '" + key + "'");
    }
    c.validate();
    return c;
}

TrainResult train_unsupervised(Autoencoder& ae, const Matrix& train, const Matrix& val, const TrainConfig& cfg) {
    const Objective obj{ae, 0.0, false};
    return run_training(ae, obj, train, {}, val, {}, cfg);
}

TrainResult fine_tune_supervised(Autoencoder& ae, const Matrix& train, std::span<const int> train_labels,
                                 const Matrix& val, std::span<const int> val_labels, std::size_t num_classes,
                                 const TrainConfig& cfg) {
    if (train_labels.size() != train.rows() || val_labels.size() != val.rows())
        throw DimensionError("fine_tune_supervised: label count differs from row count");
    if (!ae.has_head()) ae.attach_head(num_classes, Rng(cfg.seed).derive(kHeadStream).next_u64());
    else if (ae.num_classes() != num_classes) throw ContractError("classifier head has a different class count");
    const Objective obj{ae, cfg.alpha, true};
    return run_training(ae, obj, train, train_labels, val, val_labels, cfg);
}

double reconstruction_objective(const Autoencoder& ae, const Matrix& binary) {
    return Objective{ae, 0.0, false}.value(binary, {});
}

double supervised_objective(const Autoencoder& ae, const Matrix& binary, std::span<const int> labels, double alpha) {
    return Objective{ae, alpha, true}.value(binary, labels);
}

}  // namespace tabdistill::repr
