#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/matrix.hpp"

namespace tabdistill::eval {

// One evaluated (distilled set, classifier) pair.
struct RunRecord {
    std::string dataset;
    std::string encoder = "none";   // none | ffn | gnn | tf, "*" suffix for SFT
    std::string method;             // random | kmeans | agglomerative | kip | gm | full
    std::string space = "original"; // where distillation ran
    std::string variant = "as-is";  // as-is | closest-real
    std::string representation = "original";  // original | encoded | decoded
    std::size_t ipc = 0;
    std::uint64_t seed = 0;
    std::string classifier;
    double balanced_accuracy = 0.0;
    double seconds = 0.0;  // wall clock of the whole record
    std::map<std::string, double> stage_seconds;
    std::string plan_hash;
    // "ok" or "failed"; failed records carry the stage and error message
    // and are ignored by every aggregation.
    std::string status = "ok";
    std::string failed_stage;
    std::string message;

    bool ok() const noexcept { return status == "ok"; }

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// Thrown when A_F == A_R10, where regret is undefined.
class UndefinedRegretError : public ContractError {
public:
    UndefinedRegretError(double full, double random10);
    double full;
    double random10;
};

struct Baseline {
    double full = 0.0;      // A_F
    double random10 = 0.0;  // A_R10
};

// Baselines keyed by (dataset, classifier).
class RegretContext {
public:
    void set(const std::string& dataset, const std::string& classifier, Baseline b);
    bool contains(const std::string& dataset, const std::string& classifier) const;
    const Baseline& at(const std::string& dataset, const std::string& classifier) const;
    const std::map<std::pair<std::string, std::string>, Baseline>& entries() const noexcept { return entries_; }

    double regret(const std::string& dataset, const std::string& classifier, double accuracy) const;

private:
    std::map<std::pair<std::string, std::string>, Baseline> entries_;
};

// (A_F − A) / (A_F − A_R10); unclamped.
double relative_regret(const Baseline& b, double accuracy);

// One competitor's score inside one comparison group (lower is better).
struct Observation {
    std::string group;
    std::string competitor;
    double value = 0.0;
};

struct RankTable {
    std::vector<std::string> competitors;  // sorted by name
    std::vector<double> mean_rank;
    std::vector<double> median_value;  // over the groups used
    std::size_t groups_used = 0;
    std::size_t groups_skipped = 0;
};

// Ascending ranks within each group (average ranks on ties), averaged per
// competitor. Groups that lack a competitor or contain one twice are
// skipped with a warning. Throws ContractError when no group is usable.
RankTable mean_rank(std::span<const Observation> observations);

struct WinLossTable {
    std::vector<std::string> competitors;
    Matrix win_ratio;  // (i, j): share of groups where i's value < j's
    Matrix ties;       // (i, j): number of groups where they are equal
    std::size_t groups = 0;
};

WinLossTable pairwise_winloss(std::span<const Observation> observations);

struct CorrelationReport {
    Matrix correlation;
    std::vector<bool> zero_variance;  // columns given 0 off-diagonal
};

// Pearson correlation of the columns. Throws ContractError for < 2 rows.
CorrelationReport feature_correlation(const Matrix& x);

// Median of a pooled sample (mean of the two middle values for even sizes).
double median(std::vector<double> values);

}  // namespace tabdistill::eval
