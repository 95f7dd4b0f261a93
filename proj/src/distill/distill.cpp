#include "tabdistill/distill/distill.hpp"

#include <string>

#include "tabdistill/numerics/errors.hpp"

namespace tabdistill::distill {

void DistillConfig::validate() const {
    if (ipc == 0) throw ConfigError("ipc must be at least 1");
    if (space == Space::decoded) throw ConfigError("distillation runs in the original or latent space");
    if (output == OutputVariant::closest_real && !supports_closest_real(method))
        throw ConfigError(std::string("closest-real output is not defined for ") + to_string(method));
    if (kmeans.restarts == 0 || kmeans.max_iterations == 0)
        throw ConfigError("k-means restarts and iterations must be positive");
    kip.validate();
    gm.validate();
}

nlohmann::json DistillConfig::to_json() const {
    return {{"method", to_string(method)},
            {"ipc", ipc},
            {"space", to_string(space)},
            {"output", to_string(output)},
            {"seed", seed},
            {"kmeans", {{"restarts", kmeans.restarts}, {"max_iterations", kmeans.max_iterations}}},
            {"kip", kip.to_json()},
            {"gm", gm.to_json()}};
}

DistillConfig DistillConfig::from_json(const nlohmann::json& j) {
    DistillConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "method") c.method = parse_method(value.get<std::string>());
        else if (key == "ipc") value.get_to(c.ipc);
        else if (key == "space") c.space = parse_space(value.get<std::string>());
        else if (key == "output") c.output = parse_output_variant(value.get<std::string>());
        else if (key == "seed") value.get_to(c.seed);
        else if (key == "kmeans") {
            for (const auto& [k, v] : value.items()) {
                if (k == "restarts") v.get_to(c.kmeans.restarts);
                else if (k == "max_iterations") v.get_to(c.kmeans.max_iterations);
                else throw ConfigError("unknown kmeans config key '" + k + "'");
            }
        } else if (key == "kip") c.kip = KipConfig::from_json(value);
        else if (key == "gm") c.gm = GmConfig::from_json(value);
        else throw ConfigError("unknown distill config key '" + key + "'");
    }
    c.validate();
    return c;
}

DistillOutcome run_distiller(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                             const DistillConfig& config) {
    config.validate();
    DistillOutcome out;
    switch (config.method) {
        case Method::random:
            out.set = distill_random(x, y, num_classes, config.ipc, config.seed);
            break;
        case Method::kmeans:
            out.set = distill_kmeans(x, y, num_classes, config.ipc, config.output, config.seed, config.kmeans);
            break;
        case Method::agglomerative:
            out.set = distill_agglomerative(x, y, num_classes, config.ipc, config.output);
            break;
        case Method::kip: {
            KipResult r = distill_kip(x, y, num_classes, config.ipc, config.kip, config.seed);
            out.set = std::move(r.set);
            out.curve = std::move(r.loss_history);
            break;
        }
        case Method::gm: {
            GmResult r = distill_gm(x, y, num_classes, config.ipc, config.gm, config.seed);
            out.set = std::move(r.set);
            out.curve = std::move(r.distance_history);
            break;
        }
    }
    out.set.space = config.space;
    out.set.output = config.output;
    out.set.validate(x.rows());
    return out;
}

DistilledSet decode_distilled(const repr::Autoencoder& ae, const DistilledSet& latent) {
    if (latent.space != Space::latent) throw ContractError("decode_distilled: set is not in latent space");
    if (latent.features.cols() != ae.latent_dims())
        throw DimensionError("decode_distilled: set width " + std::to_string(latent.features.cols()) +
                             " differs from latent width " + std::to_string(ae.latent_dims()));
    DistilledSet out = latent;
    out.features = ae.decode(latent.features);
    out.space = Space::decoded;
    return out;
}

}  // namespace tabdistill::distill
