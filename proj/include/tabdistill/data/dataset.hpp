#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tabdistill::data {

enum class ColumnKind { numerical, categorical };

const char* to_string(ColumnKind kind) noexcept;
ColumnKind parse_column_kind(const std::string& text);

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::numerical;
    // Explicit category order for categorical columns; empty = learn from train.
    std::vector<std::string> categories;

    friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

// A cell is absent, a number (numerical columns) or a string (categorical).
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) noexcept { return std::holds_alternative<std::monostate>(c); }

struct Dataset {
    std::string name;
    std::vector<ColumnSchema> schema;
    std::vector<std::vector<Cell>> rows;
    std::vector<int> labels;
    // labels[i] indexes into label_names; first-appearance order.
    std::vector<std::string> label_names;

    std::size_t size() const noexcept { return rows.size(); }
    std::size_t num_classes() const noexcept { return label_names.size(); }
    std::size_t numeric_count() const noexcept;
    std::size_t categorical_count() const noexcept;
    std::vector<std::size_t> class_counts() const;

    // Throws ContractError when row widths, cell types or labels are inconsistent.
    void validate() const;
};

// Builds a dataset from a dense numeric matrix given as rows (all columns
// numerical, named x0, x1, ...).
Dataset numeric_dataset(std::string name, const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels);

}  // namespace tabdistill::data
