#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabdistill/distill/clustering.hpp"
#include "tabdistill/distill/distilled_set.hpp"
#include "tabdistill/distill/gm.hpp"
#include "tabdistill/distill/kip.hpp"
#include "tabdistill/repr/autoencoder.hpp"

namespace tabdistill::distill {

struct DistillConfig {
    Method method = Method::random;
    std::size_t ipc = 10;
    Space space = Space::original;  // tag only; the caller supplies matching features
    OutputVariant output = OutputVariant::as_is;
    std::uint64_t seed = 0;
    KMeansOptions kmeans;
    KipConfig kip;
    GmConfig gm;

    // Throws ConfigError for ipc 0, a decoded space, or closest-real with
    // KIP / GM.
    void validate() const;

    nlohmann::json to_json() const;
    static DistillConfig from_json(const nlohmann::json& j);
};

struct DistillOutcome {
    DistilledSet set;
    // KIP loss or GM distance per recorded step; empty for the other methods.
    std::vector<double> curve;
};

// Runs the configured distiller on (x, y) and tags the result with the
// configured space and output variant.
DistillOutcome run_distiller(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                             const DistillConfig& config);

// Maps a latent distilled set through the decoder: features become
// group-wise softmax rows in [0, 1]^D; labels and provenance carry over.
DistilledSet decode_distilled(const repr::Autoencoder& ae, const DistilledSet& latent);

}  // namespace tabdistill::distill
