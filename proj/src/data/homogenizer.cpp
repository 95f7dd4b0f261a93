#include "tabdistill/data/homogenizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/log.hpp"

namespace tabdistill::data {

std::vector<double> bin_edges(std::vector<double> values, std::size_t bins, BinStrategy strategy) {
    if (bins < 2) throw ConfigError("bins per numeric feature must be at least 2");
    if (values.empty()) return {};
    std::sort(values.begin(), values.end());
    const double lo = values.front(), hi = values.back();
    std::vector<double> raw;
    raw.reserve(bins - 1);
    for (std::size_t k = 1; k < bins; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(bins);
        if (strategy == BinStrategy::uniform) {
            raw.push_back(lo + q * (hi - lo));
            continue;
        }
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto below = static_cast<std::size_t>(std::floor(pos));
        const std::size_t above = std::min(below + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(below);
        raw.push_back(values[below] + frac * (values[above] - values[below]));
    }
    std::vector<double> edges;
    for (double e : raw)
        if (e > lo && (edges.empty() || e > edges.back())) edges.push_back(e);
    return edges;
}

Homogenizer Homogenizer::fit(const Dataset& ds, std::span<const std::size_t> train_indices,
                             const HomogenizerConfig& config) {
    if (config.bins < 2) throw ConfigError("bins per numeric feature must be at least 2");
    if (train_indices.empty()) throw ContractError("fit_homogenizer: empty train split");
    Homogenizer h;
    h.config_ = config;
    std::size_t offset = 0;
    for (std::size_t j = 0; j < ds.schema.size(); ++j) {
        const auto& col = ds.schema[j];
        FeatureGroup g;
        g.name = col.name;
        g.kind = col.kind;
        g.offset = offset;
        bool any_missing = false;
        if (col.kind == ColumnKind::numerical) {
            std::vector<double> values;
            for (auto i : train_indices) {
                const Cell& c = ds.rows.at(i)[j];
                if (is_missing(c)) any_missing = true;
                else values.push_back(std::get<double>(c));
            }
            g.edges = bin_edges(values, config.bins, config.strategy);
            if (g.edges.empty())
                log_warning("numeric column '" + col.name + "' is constant on the train split; using a single bin");
            g.size = g.edges.size() + 1;
        } else {
            std::set<std::string> seen;
            for (auto i : train_indices) {
                const Cell& c = ds.rows.at(i)[j];
                if (is_missing(c)) any_missing = true;
                else seen.insert(std::get<std::string>(c));
            }
            if (!col.categories.empty()) {
                g.categories = col.categories;
                for (const auto& s : seen)
                    if (std::find(g.categories.begin(), g.categories.end(), s) == g.categories.end())
                        throw ContractError("column '" + col.name + "': value '" + s +
                                            "' not in the declared categories");
            } else {
                g.categories.assign(seen.begin(), seen.end());
            }
            if (g.categories.empty()) {
                g.categories.push_back("");
                log_warning("categorical column '" + col.name + "' has no observed values on the train split");
            } else if (g.categories.size() < 2) {
                log_warning("categorical column '" + col.name + "' has a single category on the train split");
            }
            g.size = g.categories.size();
        }
        g.missing_slot = any_missing;
        if (any_missing) ++g.size;
        offset += g.size;
        h.groups_.push_back(std::move(g));
    }
    h.dims_ = offset;
    return h;
}

std::vector<ad::GroupSpan> Homogenizer::spans() const {
    std::vector<ad::GroupSpan> out;
    out.reserve(groups_.size());
    for (const auto& g : groups_) out.push_back({g.offset, g.size});
    return out;
}

std::size_t Homogenizer::slot(std::size_t group, const Cell& cell, std::size_t* fallbacks) const {
    const FeatureGroup& g = groups_.at(group);
    auto fallback = [&](const std::string& what) -> std::size_t {
        if (fallbacks) ++*fallbacks;
        else log_warning("feature '" + g.name + "': " + what + " mapped to slot 0");
        return 0;
    };
    if (is_missing(cell)) {
        if (g.missing_slot) return g.size - 1;
        return fallback("missing value without a missing slot");
    }
    if (g.kind == ColumnKind::numerical) {
        const double v = std::get<double>(cell);
        return static_cast<std::size_t>(std::upper_bound(g.edges.begin(), g.edges.end(), v) - g.edges.begin());
    }
    const auto& s = std::get<std::string>(cell);
    const auto it = std::find(g.categories.begin(), g.categories.end(), s);
    if (it != g.categories.end()) return static_cast<std::size_t>(it - g.categories.begin());
    if (g.missing_slot) return g.size - 1;
    return fallback("unseen category '" + s + "'");
}

void Homogenizer::check_schema(const Dataset& ds) const {
    if (ds.schema.size() != groups_.size())
        throw ContractError("schema mismatch: dataset has " + std::to_string(ds.schema.size()) +
                            " columns, homogenizer expects " + std::to_string(groups_.size()));
    for (std::size_t j = 0; j < groups_.size(); ++j)
        if (ds.schema[j].name != groups_[j].name || ds.schema[j].kind != groups_[j].kind)
            throw ContractError("schema mismatch at column " + std::to_string(j) + " ('" + ds.schema[j].name + "')");
}

Matrix Homogenizer::encode(const Dataset& ds, std::span<const std::size_t> indices) const {
    check_schema(ds);
    Matrix out(indices.size(), dims_);
    std::vector<std::size_t> fallbacks(groups_.size(), 0);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& row = ds.rows.at(indices[r]);
        for (std::size_t j = 0; j < groups_.size(); ++j)
            out(r, groups_[j].offset + slot(j, row[j], &fallbacks[j])) = 1.0;
    }
    for (std::size_t j = 0; j < groups_.size(); ++j)
        if (fallbacks[j] > 0)
            log_warning("feature '" + groups_[j].name + "': " + std::to_string(fallbacks[j]) +
                        " unseen or missing value(s) without a missing slot mapped to slot 0");
    return out;
}

Matrix Homogenizer::encode(const Dataset& ds) const {
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return encode(ds, all);
}

Matrix Homogenizer::group_argmax_decode(const Matrix& soft) const {
    if (soft.cols() != dims_)
        throw DimensionError("group_argmax_decode: width " + std::to_string(soft.cols()) + ", expected " +
                             std::to_string(dims_));
    Matrix out(soft.rows(), dims_);
    for (std::size_t r = 0; r < soft.rows(); ++r) {
        for (const auto& g : groups_) {
            double total = 0.0;
            std::size_t best = 0;
            for (std::size_t s = 0; s < g.size; ++s) {
                const double v = soft(r, g.offset + s);
                total += v;
                if (v > soft(r, g.offset + best)) best = s;
            }
            if (std::abs(total - 1.0) > 1e-6)
                throw ContractError("group_argmax_decode: group '" + g.name + "' in row " + std::to_string(r) +
                                    " sums to " + std::to_string(total));
            out(r, g.offset + best) = 1.0;
        }
    }
    return out;
}

nlohmann::json Homogenizer::to_json() const {
    nlohmann::json j;
    j["bins"] = config_.bins;
    j["strategy"] = config_.strategy == BinStrategy::quantile ? "quantile" : "uniform";
    j["groups"] = nlohmann::json::array();
    for (const auto& g : groups_) {
        j["groups"].push_back({{"name", g.name},
                               {"kind", to_string(g.kind)},
                               {"offset", g.offset},
                               {"size", g.size},
                               {"edges", g.edges},
                               {"categories", g.categories},
                               {"missing_slot", g.missing_slot}});
    }
    return j;
}

Homogenizer Homogenizer::from_json(const nlohmann::json& j) {
    Homogenizer h;
    h.config_.bins = j.at("bins").get<std::size_t>();
    const auto strat = j.at("strategy").get<std::string>();
    if (strat == "quantile") h.config_.strategy = BinStrategy::quantile;
    else if (strat == "uniform") h.config_.strategy = BinStrategy::uniform;
    else throw ConfigError("unknown bin strategy '" + strat + "'");
    std::size_t offset = 0;
    for (const auto& gj : j.at("groups")) {
        FeatureGroup g;
        g.name = gj.at("name").get<std::string>();
        g.kind = parse_column_kind(gj.at("kind").get<std::string>());
        g.offset = gj.at("offset").get<std::size_t>();
        g.size = gj.at("size").get<std::size_t>();
        g.edges = gj.at("edges").get<std::vector<double>>();
        g.categories = gj.at("categories").get<std::vector<std::string>>();
        g.missing_slot = gj.at("missing_slot").get<bool>();
        if (g.offset != offset || g.size == 0) throw ContractError("homogenizer: inconsistent group offsets");
        offset += g.size;
        h.groups_.push_back(std::move(g));
    }
    h.dims_ = offset;
    return h;
}

bool operator==(const Homogenizer& a, const Homogenizer& b) {
    if (a.dims_ != b.dims_ || a.groups_.size() != b.groups_.size()) return false;
    for (std::size_t i = 0; i < a.groups_.size(); ++i) {
        const auto &x = a.groups_[i], &y = b.groups_[i];
        if (x.name != y.name || x.kind != y.kind || x.offset != y.offset || x.size != y.size ||
            x.edges != y.edges || x.categories != y.categories || x.missing_slot != y.missing_slot)
            return false;
    }
    return true;
}

}  // namespace tabdistill::data
