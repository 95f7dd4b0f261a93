#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabdistill/distill/distilled_set.hpp"
#include "tabdistill/numerics/autodiff.hpp"
#include "tabdistill/numerics/params.hpp"
#include "tabdistill/numerics/rng.hpp"

namespace tabdistill::distill {

struct GmConfig {
    std::size_t epochs = 500;
    std::size_t hidden = 1024;  // backbone width
    std::size_t depth = 2;      // hidden layers
    double lr_mlp = 0.01;
    double lr_data = 0.1;
    double momentum_data = 0.5;
    std::size_t inner_steps = 10;  // T
    std::uint64_t init_seed = 0;   // mixed with the run seed for θ₀ draws
    // Real rows per gradient evaluation (0 = all rows).
    std::size_t real_batch = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static GmConfig from_json(const nlohmann::json& j);
};

// Backbone MLP: `depth` ReLU hidden layers of width `hidden`, linear output
// of width `classes`. Parameters "layer<i>.w" (in x out) and "layer<i>.b"
// (1 x out), both drawn from U(±1/sqrt(in)).
ParamMap init_backbone(std::size_t inputs, std::size_t hidden, std::size_t depth, std::size_t classes, Rng& rng);

// Mean softmax cross-entropy of the backbone, built from the bound
// parameters (gradients by ordinary reverse mode).
ad::Var backbone_loss(ad::Graph& g, const ad::BoundParams& theta, const Matrix& x, std::span<const int> labels);

// Parameter gradients of the mean cross-entropy written out as graph
// operations of `x` with θ held constant, so the result can itself be
// differentiated with respect to `x`. Entries follow the order of `theta`.
std::vector<ad::Var> backbone_gradients_graph(ad::Graph& g, const ParamMap& theta, ad::Var x,
                                              std::span<const int> labels);

// Numeric values of the same gradients.
GradientMap backbone_gradients(const ParamMap& theta, const Matrix& x, std::span<const int> labels);

// Σ over tensors of (1 − cos(gA_k, gB_k)); a pair of zero tensors adds 0 and
// a single zero tensor adds 1. Throws ContractError on differing layouts.
double gradient_distance(const GradientMap& a, const GradientMap& b);

// Graph form with constant reference gradients.
ad::Var gradient_distance_graph(ad::Graph& g, const GradientMap& reference, std::span<const ad::Var> gradients);

struct GmResult {
    DistilledSet set;
    // Mean D over the inner steps of each epoch (before each R update).
    std::vector<double> distance_history;
};

// Initializes R with distill_random(x, y, ipc, seed); labels stay fixed.
// Each epoch draws θ₀ from Rng(mix_seed(seed, init_seed)).derive(epoch).
GmResult distill_gm(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                    const GmConfig& config, std::uint64_t seed);

// As distill_gm but from a caller-provided R (rows grouped by class).
GmResult distill_gm_from(const Matrix& x, std::span<const int> y, std::size_t num_classes, DistilledSet init,
                         const GmConfig& config, std::uint64_t seed);

}  // namespace tabdistill::distill
