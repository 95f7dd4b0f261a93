#include "tabdistill/data/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/rng.hpp"

namespace tabdistill::data {

Dataset make_blobs(std::size_t per_class, const Matrix& centers, double stddev, std::uint64_t seed) {
    if (per_class == 0 || centers.rows() == 0) throw ConfigError("make_blobs: empty request");
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t k = 0; k < centers.rows(); ++k)
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> row(centers.cols());
            for (std::size_t j = 0; j < centers.cols(); ++j) row[j] = centers(k, j) + stddev * rng.normal();
            rows.push_back(std::move(row));
            labels.push_back(static_cast<int>(k));
        }
    return numeric_dataset("blobs", rows, labels);
}

Dataset make_annulus(const AnnulusConfig& config, std::uint64_t seed) {
    if (config.features < 2 || config.rows < 2) throw ConfigError("make_annulus: need >= 2 features and rows");
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < config.rows; ++i) {
        const int y = static_cast<int>(i % 2);
        const double radius = (y == 0 ? config.inner_radius : config.outer_radius) + config.radial_noise * rng.normal();
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        std::vector<double> row(config.features);
        row[0] = radius * std::cos(angle);
        row[1] = radius * std::sin(angle);
        for (std::size_t j = 2; j < config.features; ++j) row[j] = config.nuisance_noise * rng.normal();
        rows.push_back(std::move(row));
        labels.push_back(y);
    }
    Dataset ds = numeric_dataset("annulus", rows, labels);
    return ds;
}

Dataset make_mixed(std::size_t rows, std::size_t numeric, std::size_t categorical, std::size_t categories,
                   double missing_rate, std::size_t classes, std::uint64_t seed) {
    if (rows == 0 || classes < 1 || (numeric + categorical) == 0 || (categorical > 0 && categories < 1))
        throw ConfigError("make_mixed: invalid shape");
    Rng rng(seed);
    Dataset ds;
    ds.name = "mixed";
    for (std::size_t j = 0; j < numeric; ++j) ds.schema.push_back({"num" + std::to_string(j), ColumnKind::numerical, {}});
    for (std::size_t j = 0; j < categorical; ++j)
        ds.schema.push_back({"cat" + std::to_string(j), ColumnKind::categorical, {}});
    for (std::size_t k = 0; k < classes; ++k) ds.label_names.push_back("c" + std::to_string(k));

    for (std::size_t i = 0; i < rows; ++i) {
        const int y = static_cast<int>(i % classes);
        std::vector<Cell> row;
        for (std::size_t j = 0; j < numeric; ++j) {
            // class-dependent mean on alternating features
            const double shift = (j % 2 == 0) ? 1.5 * y : 0.0;
            row.emplace_back(shift + rng.normal());
        }
        for (std::size_t j = 0; j < categorical; ++j) {
            const std::size_t level = rng.uniform() < 0.6 ? (static_cast<std::size_t>(y) + j) % categories
                                                            : static_cast<std::size_t>(rng.below(categories));
            row.emplace_back("v" + std::to_string(level));
        }
        for (auto& cell : row)
            if (missing_rate > 0.0 && rng.uniform() < missing_rate) cell = std::monostate{};
        ds.rows.push_back(std::move(row));
        ds.labels.push_back(y);
    }
    ds.validate();
    return ds;
}

}  // namespace tabdistill::data
