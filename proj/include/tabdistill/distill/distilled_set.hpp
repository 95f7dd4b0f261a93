#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabdistill/numerics/matrix.hpp"

namespace tabdistill::distill {

enum class Method { random, kmeans, agglomerative, kip, gm };
enum class Space { original, latent, decoded };
// as_is: cluster means / learned points; closest_real: nearest member row.
enum class OutputVariant { as_is, closest_real };

const char* to_string(Method m) noexcept;
const char* to_string(Space s) noexcept;
const char* to_string(OutputVariant v) noexcept;
Method parse_method(const std::string& text);
Space parse_space(const std::string& text);
OutputVariant parse_output_variant(const std::string& text);

// Methods whose output can be replaced by real training rows.
bool supports_closest_real(Method m) noexcept;

// A distilled training set. Rows are grouped by class in ascending label
// order. `source_indices` (row indices into the distiller's input matrix)
// is filled only when every row is a real input row.
struct DistilledSet {
    Matrix features;
    std::vector<int> labels;
    std::size_t num_classes = 0;
    std::size_t ipc = 0;
    Space space = Space::original;
    Method method = Method::random;
    OutputVariant output = OutputVariant::as_is;
    std::uint64_t seed = 0;
    std::vector<std::size_t> source_indices;
    // Truncation and reseeding notes produced while distilling.
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return labels.size(); }
    bool is_real() const noexcept { return !source_indices.empty(); }
    std::vector<std::size_t> class_counts() const;

    // Shape/label consistency; when `source_rows` > 0 also checks that
    // source indices are in range. Throws ContractError.
    void validate(std::size_t source_rows = 0) const;

    nlohmann::json to_json() const;
    static DistilledSet from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static DistilledSet load(const std::filesystem::path& path);

    friend bool operator==(const DistilledSet&, const DistilledSet&) = default;
};

// Row indices of each class, ascending. Throws ContractError on labels
// outside [0, num_classes).
std::vector<std::vector<std::size_t>> indices_by_class(std::span<const int> labels, std::size_t num_classes);

// Number of rows to emit for a class of `available` rows; records a
// truncation warning when available < ipc. Throws ContractError for an empty
// class.
std::size_t per_class_quota(std::size_t ipc, std::size_t available, int label, std::vector<std::string>& warnings);

// Throws ContractError unless the set holds exactly min(ipc, class size)
// rows of every class.
void check_class_balance(const DistilledSet& set, std::span<const std::size_t> source_class_sizes);

}  // namespace tabdistill::distill
