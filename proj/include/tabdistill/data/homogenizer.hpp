#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabdistill/data/dataset.hpp"
#include "tabdistill/numerics/autodiff.hpp"
#include "tabdistill/numerics/matrix.hpp"

namespace tabdistill::data {

enum class BinStrategy { quantile, uniform };

struct HomogenizerConfig {
    std::size_t bins = 10;
    BinStrategy strategy = BinStrategy::quantile;
};

// One feature's contiguous slot range in the binary vector. Numerical
// groups hold one slot per bin; categorical groups one slot per category.
// A trailing missing slot exists when the train split had missing values.
struct FeatureGroup {
    std::string name;
    ColumnKind kind = ColumnKind::numerical;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::vector<double> edges;  // interior bin edges, strictly increasing
    std::vector<std::string> categories;
    bool missing_slot = false;

    std::size_t value_slots() const noexcept { return size - (missing_slot ? 1 : 0); }
};

// Fitted map P from heterogeneous rows to {0,1}^D. Immutable after fit().
class Homogenizer {
public:
    Homogenizer() = default;

    static Homogenizer fit(const Dataset& ds, std::span<const std::size_t> train_indices,
                           const HomogenizerConfig& config = {});

    std::size_t dims() const noexcept { return dims_; }
    std::size_t num_groups() const noexcept { return groups_.size(); }
    const std::vector<FeatureGroup>& groups() const noexcept { return groups_; }
    std::vector<ad::GroupSpan> spans() const;
    const HomogenizerConfig& config() const noexcept { return config_; }

    // Slot index (relative to the group) a cell maps to. Unseen categories
    // and missing cells go to the missing slot when it exists, else to slot
    // 0; such fallbacks are counted into `fallbacks` or, when it is null,
    // reported as warnings.
    std::size_t slot(std::size_t group, const Cell& cell, std::size_t* fallbacks = nullptr) const;

    // |indices| x D binary matrix with exactly one hot slot per group.
    Matrix encode(const Dataset& ds, std::span<const std::size_t> indices) const;
    Matrix encode(const Dataset& ds) const;

    // Per group, 1 at the largest entry (lowest index on ties), 0 elsewhere.
    // Throws ContractError when a group's entries do not sum to 1 within 1e-6.
    Matrix group_argmax_decode(const Matrix& soft) const;

    nlohmann::json to_json() const;
    static Homogenizer from_json(const nlohmann::json& j);

    friend bool operator==(const Homogenizer& a, const Homogenizer& b);

private:
    void check_schema(const Dataset& ds) const;

    HomogenizerConfig config_;
    std::vector<FeatureGroup> groups_;
    std::size_t dims_ = 0;
};

// Bin edges for `values` (non-missing, any order). Quantile edges are the
// k/bins sample quantiles (linear interpolation between order statistics);
// duplicates and edges not strictly above the minimum are dropped.
std::vector<double> bin_edges(std::vector<double> values, std::size_t bins, BinStrategy strategy);

}  // namespace tabdistill::data
