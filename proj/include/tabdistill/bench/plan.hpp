#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabdistill/data/homogenizer.hpp"
#include "tabdistill/distill/distill.hpp"
#include "tabdistill/models/classifier.hpp"
#include "tabdistill/repr/autoencoder.hpp"
#include "tabdistill/repr/train.hpp"

namespace tabdistill::bench {

// A table from CSV + sidecar, or a synthetic generator.
//   {"name": "adult", "csv": "adult.csv", "sidecar": "adult.json"}
//   {"name": "ring", "synthetic": "annulus", "seed": 7, "params": {"rows": 2000}}
// Synthetic kinds: annulus (AnnulusConfig keys), blobs (per_class, classes,
// features, spread, stddev), mixed (rows, numeric, categorical, categories,
// missing_rate, classes). Relative paths resolve against the plan file.
struct DatasetSpec {
    std::string name;
    std::filesystem::path csv;
    std::filesystem::path sidecar;
    std::string synthetic;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static DatasetSpec from_json(const nlohmann::json& j);
};

struct EncoderSpec {
    repr::EncoderConfig config;
    repr::TrainConfig train;
    bool sft = true;
    repr::TrainConfig fine_tune;

    // Architecture name, with a trailing "*" when fine-tuned.
    std::string tag() const;
    nlohmann::json to_json() const;
    static EncoderSpec from_json(const nlohmann::json& j);
};

// A whole campaign. Keys are documented in the README; unknown keys are
// rejected.
struct RunPlan {
    std::string name = "plan";
    std::vector<DatasetSpec> datasets;
    std::uint64_t split_seed = 0;
    data::HomogenizerConfig homogenizer;
    std::vector<EncoderSpec> encoders;
    std::vector<distill::Method> methods{distill::Method::random, distill::Method::kmeans};
    std::vector<distill::Space> spaces{distill::Space::original, distill::Space::latent};
    std::vector<distill::OutputVariant> outputs{distill::OutputVariant::as_is};
    std::vector<std::string> representations{"original", "encoded", "decoded"};
    std::vector<std::size_t> ipcs{10};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<models::ClassifierSpec> classifiers;
    distill::KMeansOptions kmeans;
    distill::KipConfig kip;
    distill::GmConfig gm;
    // Full-data and random@10 runs needed for regret.
    bool baselines = true;
    std::vector<std::uint64_t> baseline_seeds{0, 1, 2, 3, 4};
    std::size_t workers = 1;

    // Throws ConfigError on an empty grid, unknown representations, latent
    // space without encoders, or invalid nested configs.
    void validate() const;
    nlohmann::json to_json() const;
    static RunPlan from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static RunPlan load(const std::filesystem::path& path);
    // 16 hex digits of FNV-1a over the canonical JSON form.
    std::string hash() const;
};

inline constexpr std::size_t kBaselineIpc = 10;

// One distillation job; every classifier is trained on its output.
struct RunEntry {
    std::size_t dataset = 0;
    std::optional<std::size_t> encoder;  // set for latent-space runs
    bool full = false;                   // full-data baseline, no distillation
    distill::Method method = distill::Method::random;
    distill::OutputVariant output = distill::OutputVariant::as_is;
    std::size_t ipc = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> representations;

    distill::Space space() const noexcept {
        return encoder ? distill::Space::latent : distill::Space::original;
    }
    std::string describe(const RunPlan& plan) const;
};

// Deterministic enumeration: per dataset, baselines first (full, then
// random@10 per baseline seed), then encoders (none first), methods,
// outputs, ipc values and seeds in plan order. Combinations invalid for the
// distiller (closest-real with kip/gm) are left out, and grid entries that
// duplicate a baseline are emitted once.
std::vector<RunEntry> expand(const RunPlan& plan, bool baselines_only = false);

}  // namespace tabdistill::bench
