#include "tabdistill/data/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "tabdistill/numerics/errors.hpp"

namespace tabdistill::data {

const char* to_string(ColumnKind kind) noexcept {
    return kind == ColumnKind::numerical ? "numerical" : "categorical";
}

ColumnKind parse_column_kind(const std::string& text) {
    if (text == "numerical") return ColumnKind::numerical;
    if (text == "categorical") return ColumnKind::categorical;
    throw ConfigError("unknown column kind '" + text + "' (expected numerical or categorical)");
}

std::size_t Dataset::numeric_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : schema) n += c.kind == ColumnKind::numerical;
    return n;
}

std::size_t Dataset::categorical_count() const noexcept { return schema.size() - numeric_count(); }

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
    return counts;
}

void Dataset::validate() const {
    if (rows.size() != labels.size())
        throw ContractError("dataset '" + name + "': row and label counts differ");
    if (rows.empty()) throw ContractError("dataset '" + name + "' is empty");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != schema.size())
            throw ContractError("dataset '" + name + "': row " + std::to_string(i) +
                                " width differs from schema");
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const Cell& c = rows[i][j];
            if (is_missing(c)) continue;
            const bool ok = schema[j].kind == ColumnKind::numerical
                                ? std::holds_alternative<double>(c) && std::isfinite(std::get<double>(c))
                                : std::holds_alternative<std::string>(c);
            if (!ok)
                throw ContractError("dataset '" + name + "': bad cell at row " + std::to_string(i) +
                                    ", column '" + schema[j].name + "'");
        }
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes())
            throw ContractError("dataset '" + name + "': label out of range at row " +
                                std::to_string(i));
    }
    for (std::size_t k = 0; auto n : class_counts()) {
        if (n == 0) throw ContractError("dataset '" + name + "': class " + std::to_string(k) + " is empty");
        ++k;
    }
}

Dataset numeric_dataset(std::string name, const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels) {
    Dataset ds;
    ds.name = std::move(name);
    const std::size_t width = features.empty() ? 0 : features.front().size();
    for (std::size_t j = 0; j < width; ++j) ds.schema.push_back({"x" + std::to_string(j), ColumnKind::numerical, {}});
    int max_label = -1;
    for (std::size_t i = 0; i < features.size(); ++i) {
        ds.rows.emplace_back(features[i].begin(), features[i].end());
        max_label = std::max(max_label, labels.at(i));
    }
    ds.labels = labels;
    for (int k = 0; k <= max_label; ++k) ds.label_names.push_back(std::to_string(k));
    ds.validate();
    return ds;
}

}  // namespace tabdistill::data
