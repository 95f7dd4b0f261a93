#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabdistill/repr/autoencoder.hpp"

namespace tabdistill::repr {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double alpha = 0.5;  // classification weight during fine-tuning
    std::size_t patience = 16;
    std::uint64_t seed = 0;

    // Throws ConfigError on α < 0, patience 0, batch 0 or lr <= 0. α = 0 is
    // accepted as the pure-reconstruction limit of fine-tuning.
    void validate() const;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// Loss curves: entry 0 is measured before the first update, entry e after
// epoch e, always on the full train / validation matrices.
struct TrainResult {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    bool early_stopped = false;
};

// Minimizes the mean reconstruction loss with mini-batch Adam and restores
// the parameters of the best validation epoch. Throws NumericalError naming
// the epoch if the loss becomes non-finite.
TrainResult train_unsupervised(Autoencoder& ae, const Matrix& train, const Matrix& val, const TrainConfig& cfg);

// Attaches a classifier head (if absent) and minimizes
// recon + α·CE(y, f(φ(x))); early stopping monitors the same combined
// objective on validation data.
TrainResult fine_tune_supervised(Autoencoder& ae, const Matrix& train, std::span<const int> train_labels,
                                 const Matrix& val, std::span<const int> val_labels, std::size_t num_classes,
                                 const TrainConfig& cfg);

// Objective values on fixed data (no dropout).
double reconstruction_objective(const Autoencoder& ae, const Matrix& binary);
double supervised_objective(const Autoencoder& ae, const Matrix& binary, std::span<const int> labels, double alpha);

}  // namespace tabdistill::repr
