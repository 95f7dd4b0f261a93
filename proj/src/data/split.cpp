#include "tabdistill/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/rng.hpp"

namespace tabdistill::data {

DataSplit stratified_split(std::span<const int> labels, const SplitRatios& ratios, std::uint64_t seed) {
    const double total = ratios.train + ratios.validation + ratios.test;
    if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0 || std::abs(total - 1.0) > 1e-9)
        throw ConfigError("split ratios must be positive and sum to 1");
    if (labels.empty()) throw ContractError("stratified_split: no rows");

    int max_label = 0;
    for (int y : labels) {
        if (y < 0) throw ContractError("stratified_split: negative label");
        max_label = std::max(max_label, y);
    }
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);

    DataSplit split;
    Rng rng(seed);
    for (std::size_t k = 0; k < members.size(); ++k) {
        auto& idx = members[k];
        const std::size_t n = idx.size();
        if (n == 0) continue;
        if (n < 3)
            throw ContractError("stratification error: class " + std::to_string(k) + " has " +
                                std::to_string(n) + " samples, need at least 3");
        rng.shuffle(std::span<std::size_t>(idx));
        auto n_train = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(n)));
        auto n_val = static_cast<std::size_t>(std::llround(ratios.validation * static_cast<double>(n)));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 2);
        n_val = std::clamp<std::size_t>(n_val, 1, n - n_train - 1);
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.validation.insert(split.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

DataSplit stratified_split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed) {
    return stratified_split(std::span<const int>(ds.labels), ratios, seed);
}

std::vector<int> take_labels(std::span<const int> labels, std::span<const std::size_t> indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(labels[i]);
    return out;
}

}  // namespace tabdistill::data
