#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabdistill/distill/distilled_set.hpp"
#include "tabdistill/numerics/autodiff.hpp"

namespace tabdistill::distill {

struct KipConfig {
    std::size_t epochs = 1000;
    // Nominal network width. The kernel is the infinite-width limit, so this
    // value is recorded but does not enter the computation.
    std::size_t width = 1024;
    // Ridge λ; unset means 1e-6·n for n distilled rows.
    std::optional<double> ridge;
    bool learn_labels = false;
    double learning_rate = 0.01;  // Adam
    // Target rows per step (0 = all rows every step).
    std::size_t batch_size = 0;

    void validate() const;
    double resolved_ridge(std::size_t distilled_rows) const;

    nlohmann::json to_json() const;
    static KipConfig from_json(const nlohmann::json& j);
};

// Regression targets: a single ±1 column for two classes (class 1 → +1),
// centered one-hot e_y − 1/L otherwise.
Matrix kip_targets(std::span<const int> labels, std::size_t num_classes);

// Class decisions from regression outputs: sign for two classes (0 counts as
// class 0), argmax with lowest-index ties otherwise.
std::vector<int> kip_decide(const Matrix& predictions, std::size_t num_classes);

// Kernel ridge regression K(Xq, X̄)(K(X̄, X̄) + λI)⁻¹ Ȳ.
Matrix kip_predict(const Matrix& distilled, const Matrix& distilled_targets, const Matrix& query, double ridge);

// Mean squared error between KRR predictions on `x` and `targets`, with
// gradients through the kernel and the ridge solve into `distilled` (and
// `distilled_targets` when it is a parameter).
ad::Var kip_loss(ad::Var distilled, ad::Var distilled_targets, const Matrix& x, const Matrix& targets,
                 double ridge);

struct KipResult {
    DistilledSet set;
    // loss_history[t] is the loss before update t; the last entry follows
    // the final update (epochs + 1 entries).
    std::vector<double> loss_history;
    Matrix learned_targets;  // final Ȳ (equals the fixed targets unless learned)
};

// Initializes X̄ with distill_random(x, y, ipc, seed) and optimizes it (and
// Ȳ when learn_labels is set) with Adam. Output labels are the fixed
// balanced assignment of the initialization.
KipResult distill_kip(const Matrix& x, std::span<const int> y, std::size_t num_classes, std::size_t ipc,
                      const KipConfig& config, std::uint64_t seed);

}  // namespace tabdistill::distill
