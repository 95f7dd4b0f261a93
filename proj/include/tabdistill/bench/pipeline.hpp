#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tabdistill/bench/plan.hpp"
#include "tabdistill/data/dataset.hpp"
#include "tabdistill/data/split.hpp"
#include "tabdistill/distill/distilled_set.hpp"
#include "tabdistill/eval/metrics.hpp"
#include "tabdistill/repr/autoencoder.hpp"
#include "tabdistill/repr/train.hpp"

namespace tabdistill::bench {

data::Dataset load_dataset(const DatasetSpec& spec);

// Split, fitted homogenizer and the binary matrices of each part.
struct PreparedData {
    data::Dataset dataset;
    data::DataSplit split;
    data::Homogenizer homogenizer;
    Matrix train, validation, test;
    std::vector<int> train_labels, validation_labels, test_labels;
    std::size_t num_classes = 0;
    double seconds = 0.0;
};

// Stratified 70/15/15 split with the plan's split seed; the homogenizer is
// fitted on the train part only.
PreparedData prepare_data(const DatasetSpec& spec, const RunPlan& plan);

struct TrainedEncoder {
    repr::Autoencoder ae;
    std::string tag;
    Matrix train_latent, validation_latent, test_latent;
    repr::TrainResult pretrain;
    std::optional<repr::TrainResult> finetune;
    double seconds = 0.0;
};

// Reconstruction training, then supervised fine-tuning when the spec asks
// for it.
TrainedEncoder train_encoder(const PreparedData& data, const EncoderSpec& spec);

struct EntryResult {
    std::vector<eval::RunRecord> records;
    // The set as distilled (latent sets keep latent features).
    std::optional<distill::DistilledSet> set;
    // Sets in binary width D that were evaluated, keyed by representation.
    std::vector<std::pair<std::string, distill::DistilledSet>> binary_sets;
};

// Original-space pipeline: distill homogenized train rows, train every
// classifier on the result and score it on homogenized test rows. A stage
// failure yields failed records instead of an exception.
EntryResult run_vanilla(const RunPlan& plan, const RunEntry& entry, const PreparedData& data);

// Latent-space pipeline: distill φ(train); evaluate encoded sets against
// φ(test), decoded sets against homogenized test rows, and for closest-real
// sets also the selected real rows in their original binary form.
EntryResult run_tdcoler(const RunPlan& plan, const RunEntry& entry, const PreparedData& data,
                        const TrainedEncoder& encoder);

using SetObserver = std::function<void(const RunEntry&, const distill::DistilledSet&)>;

struct BenchOptions {
    std::filesystem::path out;
    std::size_t workers = 0;  // 0: use the plan's value
    bool baselines_only = false;
    bool write_reports = true;
    // Called once per distilled set, serialized across workers.
    SetObserver observer;
};

struct BenchSummary {
    std::size_t entries = 0;
    std::size_t records = 0;
    std::size_t failed = 0;
};

// Expands the plan and executes the entries on a worker pool. Records are
// appended to <out>/records.jsonl as entries finish; binary-width sets go
// to <out>/sets/<dataset>/ and the reports are regenerated at the end.
BenchSummary run_bench(const RunPlan& plan, const BenchOptions& options);

// File name used for a saved set.
std::string set_file_name(const eval::RunRecord& r);

}  // namespace tabdistill::bench
