#pragma once

#include <cstdint>
#include <string>

#include "tabdistill/numerics/params.hpp"

namespace tabdistill {

enum class OptimizerKind { sgd_momentum, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.0;  // sgd-momentum only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // L2 penalty added to the gradient before the update.
    double weight_decay = 0.0;
};

// First-order optimizer with per-parameter slots created lazily on the first
// step and keyed by parameter name.
//
//   sgd-momentum: v ← μ·v + g;  p ← p − lr·v
//   adam:         bias-corrected moment estimates (Kingma & Ba)
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config);

    const OptimizerConfig& config() const noexcept { return config_; }
    std::uint64_t steps() const noexcept { return steps_; }
    const ParamMap& first_moments() const noexcept { return first_; }
    const ParamMap& second_moments() const noexcept { return second_; }

    // Updates every entry of `params` that has a gradient of the same name.
    // Throws DimensionError when a gradient or slot shape disagrees.
    void step(ParamMap& params, const GradientMap& grads);

private:
    OptimizerConfig config_;
    std::uint64_t steps_ = 0;
    ParamMap first_;   // velocity (sgd) or m (adam)
    ParamMap second_;  // v (adam)
};

}  // namespace tabdistill
