#pragma once

#include <cstddef>
#include <cstdint>

#include "tabdistill/data/dataset.hpp"
#include "tabdistill/numerics/matrix.hpp"

namespace tabdistill::data {

// Isotropic Gaussian blobs, `per_class` rows around each row of `centers`.
Dataset make_blobs(std::size_t per_class, const Matrix& centers, double stddev, std::uint64_t seed);

struct AnnulusConfig {
    std::size_t rows = 2000;
    std::size_t features = 8;
    double inner_radius = 1.0;
    double outer_radius = 2.0;
    double radial_noise = 0.25;
    // Std of the independent Gaussian features beyond the first two.
    double nuisance_noise = 1.0;
};

// Two concentric noisy rings in the first two coordinates (class 0 inner,
// class 1 outer, balanced); remaining features are label-independent noise.
// Not linearly separable.
Dataset make_annulus(const AnnulusConfig& config, std::uint64_t seed);

// Mixed table: `numeric` Gaussian columns and `categorical` columns with
// `categories` levels, labels depending on both, and each cell missing
// with probability `missing_rate`.
Dataset make_mixed(std::size_t rows, std::size_t numeric, std::size_t categorical,
                   std::size_t categories, double missing_rate, std::size_t classes,
                   std::uint64_t seed);

}  // namespace tabdistill::data
