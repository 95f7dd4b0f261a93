#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tabdistill/data/dataset.hpp"

namespace tabdistill::data {

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

// Index lists into a Dataset, each sorted ascending.
struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// Per-class shuffled partition. Per class of size n: round(train·n) rows go
// to train, round(validation·n) to validation and the rest to test, with at
// least one row in each part. Classes with fewer than 3 rows are rejected.
DataSplit stratified_split(std::span<const int> labels, const SplitRatios& ratios,
                           std::uint64_t seed);
DataSplit stratified_split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed);

// Labels of `labels` restricted to `indices`.
std::vector<int> take_labels(std::span<const int> labels, std::span<const std::size_t> indices);

}  // namespace tabdistill::data
