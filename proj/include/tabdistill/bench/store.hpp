#pragma once

#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "tabdistill/eval/metrics.hpp"

namespace tabdistill::bench {

// Append-only JSON-lines log of RunRecords at <dir>/records.jsonl. Appends
// are serialized and flushed line by line.
class ResultsStore {
public:
    explicit ResultsStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path records_path() const { return dir_ / "records.jsonl"; }

    void append(const eval::RunRecord& record);
    // Every stored line in file order; throws DataError naming the line on
    // malformed input.
    std::vector<eval::RunRecord> load() const;

private:
    std::filesystem::path dir_;
    std::mutex mutex_;
};

// Identity of a record within a campaign (everything except metrics,
// timing and status).
std::string record_key(const eval::RunRecord& r);

// Last record per key, ordered by key. Re-running an identical plan thus
// leaves the result unchanged.
std::vector<eval::RunRecord> latest_records(std::span<const eval::RunRecord> records);

class MissingBaselineError : public ContractError {
public:
    using ContractError::ContractError;
};

// A_F from the successful full-data record and A_R10 as the mean of the
// random@10 records of the five lowest distinct seeds (original space,
// no encoder). Throws MissingBaselineError naming what is missing.
eval::Baseline compute_baseline(std::span<const eval::RunRecord> records, const std::string& dataset,
                                const std::string& classifier);
eval::RegretContext compute_context(std::span<const eval::RunRecord> records, const std::string& dataset,
                                    const std::string& classifier);
// Context for every (dataset, classifier) pair that has complete baselines;
// missing pairs are reported as warnings.
eval::RegretContext compute_all_contexts(std::span<const eval::RunRecord> records);

}  // namespace tabdistill::bench
