#include "tabdistill/numerics/optim.hpp"

#include <cmath>

namespace tabdistill {

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
    if (!(config_.learning_rate > 0.0))
        throw ConfigError("Optimizer: learning rate must be positive");
    if (config_.momentum < 0.0) throw ConfigError("Optimizer: momentum must be non-negative");
}

void Optimizer::step(ParamMap& params, const GradientMap& grads) {
    ++steps_;
    const double lr = config_.learning_rate;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));

    for (auto& [name, p] : params) {
        if (!grads.contains(name)) continue;
        const Matrix& g = grads.at(name);
        if (!g.same_shape(p))
            throw DimensionError("Optimizer: gradient for '" + name + "' has shape " +
                                 g.shape_string() + ", parameter " + p.shape_string());
        if (!first_.contains(name)) first_.add(name, Matrix(p.rows(), p.cols()));
        Matrix& m = first_.at(name);
        if (!m.same_shape(p))
            throw DimensionError("Optimizer: slot shape mismatch for '" + name + "'");

        auto pd = p.data();
        const auto gd = g.data();
        auto md = m.data();
        if (config_.kind == OptimizerKind::sgd_momentum) {
            for (std::size_t i = 0; i < pd.size(); ++i) {
                const double gi = gd[i] + config_.weight_decay * pd[i];
                md[i] = config_.momentum * md[i] + gi;
                pd[i] -= lr * md[i];
            }
            continue;
        }
        if (!second_.contains(name)) second_.add(name, Matrix(p.rows(), p.cols()));
        Matrix& v = second_.at(name);
        if (!v.same_shape(p))
            throw DimensionError("Optimizer: slot shape mismatch for '" + name + "'");
        auto vd = v.data();
        for (std::size_t i = 0; i < pd.size(); ++i) {
            const double gi = gd[i] + config_.weight_decay * pd[i];
            md[i] = config_.beta1 * md[i] + (1.0 - config_.beta1) * gi;
            vd[i] = config_.beta2 * vd[i] + (1.0 - config_.beta2) * gi * gi;
            const double mhat = md[i] / bc1;
            const double vhat = vd[i] / bc2;
            pd[i] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }
}

}  // namespace tabdistill
