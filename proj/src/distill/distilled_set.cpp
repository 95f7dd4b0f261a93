#include "tabdistill/distill/distilled_set.hpp"

#include <algorithm>
#include <fstream>

#include "tabdistill/data/csv.hpp"
#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/log.hpp"

namespace tabdistill::distill {

namespace {

constexpr int kFormatVersion = 1;

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& text, const Enum (&values)[N], const char* what) {
    for (Enum v : values)
        if (text == to_string(v)) return v;
    throw ConfigError(std::string("unknown ") + what + " '" + text + "'");
}

constexpr Method kMethods[] = {Method::random, Method::kmeans, Method::agglomerative, Method::kip, Method::gm};
constexpr Space kSpaces[] = {Space::original, Space::latent, Space::decoded};
constexpr OutputVariant kVariants[] = {OutputVariant::as_is, OutputVariant::closest_real};

}  // namespace

const char* to_string(Method m) noexcept {
    switch (m) {
        case Method::random: return "random";
        case Method::kmeans: return "kmeans";
        case Method::agglomerative: return "agglomerative";
        case Method::kip: return "kip";
        case Method::gm: return "gm";
    }
    return "?";
}

const char* to_string(Space s) noexcept {
    switch (s) {
        case Space::original: return "original";
        case Space::latent: return "latent";
        case Space::decoded: return "decoded";
    }
    return "?";
}

const char* to_string(OutputVariant v) noexcept {
    return v == OutputVariant::as_is ? "as-is" : "closest-real";
}

Method parse_method(const std::string& text) { return parse_enum(text, kMethods, "distillation method"); }
Space parse_space(const std::string& text) { return parse_enum(text, kSpaces, "space"); }
OutputVariant parse_output_variant(const std::string& text) { return parse_enum(text, kVariants, "output variant"); }

bool supports_closest_real(Method m) noexcept {
    return m == Method::random || m == Method::kmeans || m == Method::agglomerative;
}

std::vector<std::size_t> DistilledSet::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (int y : labels)
        if (y >= 0 && static_cast<std::size_t>(y) < num_classes) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

void DistilledSet::validate(std::size_t source_rows) const {
    if (features.rows() != labels.size())
        throw ContractError("distilled set: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(features.rows()) + " rows");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
            throw ContractError("distilled set: label out of range at row " + std::to_string(i));
        if (i > 0 && labels[i] < labels[i - 1]) throw ContractError("distilled set: rows not grouped by class");
    }
    if (!source_indices.empty()) {
        if (source_indices.size() != labels.size())
            throw ContractError("distilled set: source index count differs from row count");
        if (source_rows > 0)
            for (auto s : source_indices)
                if (s >= source_rows) throw ContractError("distilled set: source index out of range");
    }
}

nlohmann::json DistilledSet::to_json() const {
    nlohmann::json j;
    j["format"] = "tabdistill-distilled-set";
    j["version"] = kFormatVersion;
    j["method"] = to_string(method);
    j["space"] = to_string(space);
    j["output"] = to_string(output);
    j["seed"] = seed;
    j["ipc"] = ipc;
    j["num_classes"] = num_classes;
    j["rows"] = features.rows();
    j["cols"] = features.cols();
    j["features"] = features.storage();
    j["labels"] = labels;
    j["source_indices"] = source_indices;
    j["warnings"] = warnings;
    return j;
}

DistilledSet DistilledSet::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tabdistill-distilled-set") throw ContractError("not a distilled set");
    if (j.at("version").get<int>() != kFormatVersion) throw ContractError("unsupported distilled set version");
    DistilledSet s;
    s.method = parse_method(j.at("method").get<std::string>());
    s.space = parse_space(j.at("space").get<std::string>());
    s.output = parse_output_variant(j.at("output").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.ipc = j.at("ipc").get<std::size_t>();
    s.num_classes = j.at("num_classes").get<std::size_t>();
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto values = j.at("features").get<std::vector<double>>();
    if (values.size() != rows * cols) throw ContractError("distilled set: feature count differs from shape");
    s.features = Matrix(rows, cols, std::move(values));
    s.labels = j.at("labels").get<std::vector<int>>();
    s.source_indices = j.at("source_indices").get<std::vector<std::size_t>>();
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    s.validate();
    return s;
}

void DistilledSet::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data::DataError("cannot write '" + path.string() + "'");
    out << to_json().dump() << '\n';
}

DistilledSet DistilledSet::load(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(data::read_text_file(path)));
}

std::vector<std::vector<std::size_t>> indices_by_class(std::span<const int> labels, std::size_t num_classes) {
    std::vector<std::vector<std::size_t>> out(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
            throw ContractError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(num_classes) +
                                ")");
        out[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    return out;
}

std::size_t per_class_quota(std::size_t ipc, std::size_t available, int label, std::vector<std::string>& warnings) {
    if (ipc == 0) throw ConfigError("ipc must be at least 1");
    if (available == 0) throw ContractError("class " + std::to_string(label) + " has no training rows");
    if (available >= ipc) return ipc;
    std::string msg = "class " + std::to_string(label) + " has " + std::to_string(available) +
                      " rows; truncating ipc " + std::to_string(ipc) + " to " + std::to_string(available);
    log_warning(msg);
    warnings.push_back(std::move(msg));
    return available;
}

void check_class_balance(const DistilledSet& set, std::span<const std::size_t> source_class_sizes) {
    if (source_class_sizes.size() != set.num_classes)
        throw ContractError("class balance: class count mismatch");
    const auto counts = set.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const std::size_t expected = std::min(set.ipc, source_class_sizes[c]);
        if (counts[c] != expected)
            throw ContractError("class balance: class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                                " rows, expected " + std::to_string(expected));
    }
}

}  // namespace tabdistill::distill
